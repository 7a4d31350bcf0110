// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <png.h>
#include <zlib.h>

#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "imgvox/core/atomic_file.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"

namespace imgvox::data {

using TextChunks = std::map<std::string, std::string>;

struct DecodedImage {
  Tensor<float> pixels;  // RGB, [0, 1]
  TextChunks text;       // PNG tEXt entries; empty for JPEG
};

inline std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Value an 8-bit export would round-trip to.
template <typename T>
Tensor<T> quantize_u8(const Tensor<T>& x) {
  Tensor<T> q(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) q[i] = static_cast<T>(to_u8(static_cast<double>(x[i])) / 255.0);
  return q;
}

namespace detail {

inline constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

inline std::uint32_t be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (p[1] << 16) | (p[2] << 8) | p[3];
}

inline void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Walks the chunk list; throws on structural damage.
inline TextChunks png_text_chunks(std::span<const std::uint8_t> png, const std::string& origin) {
  TextChunks out;
  std::size_t pos = 8;
  while (pos + 12 <= png.size()) {
    const std::uint32_t len = be32(png.data() + pos);
    if (len > png.size() - pos - 12) throw IoError(origin + ": truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(png.data() + pos + 4);
    if (std::memcmp(type, "tEXt", 4) == 0) {
      const auto* body = reinterpret_cast<const char*>(png.data() + pos + 8);
      const std::string chunk(body, len);
      const auto nul = chunk.find('\0');
      if (nul != std::string::npos) out[chunk.substr(0, nul)] = chunk.substr(nul + 1);
    }
    if (std::memcmp(type, "IEND", 4) == 0) break;
    pos += 12 + len;
  }
  return out;
}

inline std::vector<std::uint8_t> text_chunk(const std::string& key, const std::string& value) {
  std::vector<std::uint8_t> body = {'t', 'E', 'X', 't'};
  body.insert(body.end(), key.begin(), key.end());
  body.push_back(0);
  body.insert(body.end(), value.begin(), value.end());
  std::vector<std::uint8_t> chunk;
  put_be32(chunk, static_cast<std::uint32_t>(body.size() - 4));
  chunk.insert(chunk.end(), body.begin(), body.end());
  put_be32(chunk, static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size()))));
  return chunk;
}

inline Tensor<float> from_interleaved(const std::uint8_t* rgb, int width, int height) {
  Tensor<float> t(3, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) t(c, y, x) = rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c] / 255.0f;
    }
  }
  return t;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace detail

inline bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && std::memcmp(b.data(), detail::kPngSignature, 8) == 0;
}
inline bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

inline DecodedImage decode_png(std::span<const std::uint8_t> bytes, const std::string& origin = "png") {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError(origin + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  // Transparent pixels are composited onto black.
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(origin + ": " + image.message);
  }
  DecodedImage out;
  out.pixels = detail::from_interleaved(rgb.data(), static_cast<int>(image.width), static_cast<int>(image.height));
  out.text = detail::png_text_chunks(bytes, origin);
  return out;
}

inline DecodedImage decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& origin = "jpeg") {
  jpeg_decompress_struct cinfo;
  detail::JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = detail::jpeg_error_exit;
  std::vector<std::uint8_t> rgb;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(origin + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return {detail::from_interleaved(rgb.data(), w, h), {}};
}

inline DecodedImage decode_image(std::span<const std::uint8_t> bytes, const std::string& origin = "image") {
  if (is_png(bytes)) return decode_png(bytes, origin);
  if (is_jpeg(bytes)) return decode_jpeg(bytes, origin);
  throw IoError(origin + ": not a PNG or JPEG image");
}

inline DecodedImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_image(bytes, path.string());
}

// 8-bit RGB PNG. Text entries become tEXt chunks placed before IEND.
inline std::vector<std::uint8_t> encode_png(const Tensor<float>& rgb, const TextChunks& text = {}) {
  if (rgb.channels() != 3) throw InputError("encode_png expects 3 channels, got " + rgb.shape().str());
  const int w = rgb.width();
  const int h = rgb.height();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_u8(rgb(c, y, x));
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  if (!text.empty()) {
    std::vector<std::uint8_t> extra;
    for (const auto& [k, v] : text) {
      const auto chunk = detail::text_chunk(k, v);
      extra.insert(extra.end(), chunk.begin(), chunk.end());
    }
    out.insert(out.end() - 12, extra.begin(), extra.end());  // IEND is the last 12 bytes
  }
  return out;
}

inline void write_png(const std::filesystem::path& path, const Tensor<float>& rgb, const TextChunks& text = {}) {
  atomic_write(path, encode_png(rgb, text));
}

// Bilinear resampling with pixel-center alignment.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& src, int height, int width) {
  if (height <= 0 || width <= 0) throw InputError("resize target must be positive");
  if (src.height() == height && src.width() == width) return src;
  Tensor<T> out(src.channels(), height, width);
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < src.channels(); ++c) {
        const double top = src(c, y0, x0) * (1.0 - wx) + src(c, y0, x1) * wx;
        const double bottom = src(c, y1, x0) * (1.0 - wx) + src(c, y1, x1) * wx;
        out(c, y, x) = static_cast<T>(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

}  // namespace imgvox::data
