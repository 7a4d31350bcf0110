// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "imgvox/audio/resample.hpp"
#include "imgvox/audio/waveform.hpp"
#include "imgvox/core/atomic_file.hpp"
#include "imgvox/core/error.hpp"

namespace imgvox::audio {

// Interleaved samples as stored in a WAV file, before mixdown/resampling.
struct WavData {
  int sample_rate = 0;
  int channels = 0;
  std::vector<float> interleaved;
};

namespace detail {

inline std::uint32_t le32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

// Inverse of the x / 32768 decode, saturating at +32767.
inline std::int16_t to_pcm16(float s) {
  return static_cast<std::int16_t>(std::clamp<long>(std::lround(static_cast<double>(s) * 32768.0), -32768, 32767));
}

}  // namespace detail

// Parses PCM 8/16/24/32-bit and IEEE float 32/64-bit WAV, including
// WAVE_FORMAT_EXTENSIBLE.
inline WavData parse_wav(std::span<const std::uint8_t> bytes, const std::string& origin = "wav") {
  using detail::le16;
  using detail::le32;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError(origin + ": not a RIFF/WAVE file");
  }
  int format = 0;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || avail < 16) throw IoError(origin + ": truncated fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = static_cast<int>(le32(chunk + 12));
      bits = le16(chunk + 22);
      if (format == 0xFFFE && len >= 40 && avail >= 40) format = le16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = std::min<std::size_t>(len, avail);
    }
    pos = body + len + (len & 1u);
  }
  if (format == 0) throw IoError(origin + ": missing fmt chunk");
  if (data == nullptr) throw IoError(origin + ": missing data chunk");
  if (channels <= 0 || rate <= 0) throw IoError(origin + ": bad channel count or sample rate");

  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) {
    throw IoError(origin + ": unsupported WAV encoding " + std::to_string(format));
  }
  if (is_float ? (bits != 32 && bits != 64) : (bits != 8 && bits != 16 && bits != 24 && bits != 32)) {
    throw IoError(origin + ": unsupported bit depth " + std::to_string(bits));
  }
  const std::size_t width = static_cast<std::size_t>(bits / 8);
  const std::size_t n = data_len / width;
  WavData out{rate, channels, std::vector<float>(n - n % channels)};
  for (std::size_t i = 0; i < out.interleaved.size(); ++i) {
    const std::uint8_t* p = data + i * width;
    float v = 0.0f;
    if (is_float && bits == 32) {
      std::memcpy(&v, p, 4);
    } else if (is_float) {
      double d = 0.0;
      std::memcpy(&d, p, 8);
      v = static_cast<float>(d);
    } else if (bits == 8) {
      v = (static_cast<int>(p[0]) - 128) / 128.0f;
    } else if (bits == 16) {
      v = static_cast<std::int16_t>(le16(p)) / 32768.0f;
    } else if (bits == 24) {
      std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
      if (s & 0x800000) s -= 0x1000000;
      v = static_cast<float>(s / 8388608.0);
    } else {
      v = static_cast<float>(static_cast<std::int32_t>(le32(p)) / 2147483648.0);
    }
    out.interleaved[i] = std::isfinite(v) ? v : 0.0f;
  }
  return out;
}

// Averages channels and resamples to 16 kHz.
inline Waveform to_waveform(const WavData& wav) {
  const std::size_t frames = wav.interleaved.size() / wav.channels;
  std::vector<float> mono(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < wav.channels; ++c) acc += wav.interleaved[f * wav.channels + c];
    mono[f] = static_cast<float>(acc / wav.channels);
  }
  return Waveform(resample(mono, wav.sample_rate, kSampleRate));
}

inline Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return to_waveform(parse_wav(bytes, path.string()));
}

// PCM16 mono 16 kHz.
inline std::vector<std::uint8_t> encode_wav(const Waveform& wave) {
  using detail::put16;
  using detail::put32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.size() * 2);
  std::vector<std::uint8_t> b;
  b.reserve(44 + data_bytes);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, 36 + data_bytes);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, 1);
  put16(b, 1);
  put32(b, kSampleRate);
  put32(b, kSampleRate * 2);
  put16(b, 2);
  put16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, data_bytes);
  for (float s : wave.samples()) {
    put16(b, static_cast<std::uint16_t>(detail::to_pcm16(s)));
  }
  return b;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  atomic_write(path, encode_wav(wave));
}

// Test helper: writes arbitrary rate/channels/encoding (16-bit PCM or 32-bit float).
inline std::vector<std::uint8_t> encode_wav_raw(const WavData& wav, bool as_float) {
  using detail::put16;
  using detail::put32;
  const int width = as_float ? 4 : 2;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wav.interleaved.size() * width);
  std::vector<std::uint8_t> b;
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, 36 + data_bytes);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, as_float ? 3 : 1);
  put16(b, static_cast<std::uint16_t>(wav.channels));
  put32(b, static_cast<std::uint32_t>(wav.sample_rate));
  put32(b, static_cast<std::uint32_t>(wav.sample_rate * wav.channels * width));
  put16(b, static_cast<std::uint16_t>(wav.channels * width));
  put16(b, static_cast<std::uint16_t>(width * 8));
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, data_bytes);
  for (float s : wav.interleaved) {
    if (as_float) {
      std::uint32_t u = 0;
      std::memcpy(&u, &s, 4);
      put32(b, u);
    } else {
      put16(b, static_cast<std::uint16_t>(detail::to_pcm16(s)));
    }
  }
  return b;
}

}  // namespace imgvox::audio
