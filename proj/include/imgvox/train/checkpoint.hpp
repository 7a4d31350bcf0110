// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "imgvox/core/atomic_file.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/nested/nested.hpp"
#include "imgvox/train/config.hpp"

// Checkpoint file layout (all integers little-endian):
//
//   "THII"  u32 version  u64 header_len  header (UTF-8 JSON)
//   u64 tensor_count
//   tensor_count x { u32 name_len, name, u8 dtype, u32 ndim, u64 dims[ndim],
//                    u64 offset, u64 byte_length }
//   payload
//
// Offsets are absolute and strictly increasing; dtype 0 = float32,
// 1 = float64.
namespace imgvox::train {

inline constexpr char kCheckpointMagic[4] = {'T', 'H', 'I', 'I'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

inline std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

struct NamedTensor {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> bytes;

  std::uint64_t elements() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

// Location of a tensor inside an encoded file, for inspection.
struct TableEntry {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint64_t> dims;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

struct RawCheckpoint {
  std::uint32_t version = kCheckpointVersion;
  nlohmann::json header;
  std::vector<NamedTensor> tensors;
  std::vector<TableEntry> table;  // filled by decode
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return b_.size(); }

  void need(std::size_t n, const char* what) const {
    if (n > b_.size() - pos_) throw TruncatedPayloadError(std::string("checkpoint truncated in ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return b_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const RawCheckpoint& ck) {
  using detail::put_u32;
  using detail::put_u64;
  const std::string header = ck.header.dump();
  std::vector<std::uint8_t> b(kCheckpointMagic, kCheckpointMagic + 4);
  put_u32(b, ck.version);
  put_u64(b, header.size());
  b.insert(b.end(), header.begin(), header.end());
  put_u64(b, ck.tensors.size());

  std::size_t table_size = 0;
  for (const auto& t : ck.tensors) table_size += 4 + t.name.size() + 1 + 4 + 8 * t.dims.size() + 16;
  std::uint64_t offset = b.size() + table_size;
  for (const auto& t : ck.tensors) {
    if (t.bytes.size() != t.elements() * dtype_size(t.dtype)) {
      throw CheckpointError("tensor " + t.name + " byte size does not match its shape");
    }
    put_u32(b, static_cast<std::uint32_t>(t.name.size()));
    b.insert(b.end(), t.name.begin(), t.name.end());
    b.push_back(static_cast<std::uint8_t>(t.dtype));
    put_u32(b, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u64(b, d);
    put_u64(b, offset);
    put_u64(b, t.bytes.size());
    offset += t.bytes.size();
  }
  for (const auto& t : ck.tensors) b.insert(b.end(), t.bytes.begin(), t.bytes.end());
  return b;
}

inline RawCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw CorruptHeaderError("checkpoint too short for magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) throw CorruptHeaderError("bad checkpoint magic");
  detail::Reader r(bytes.subspan(4));
  RawCheckpoint ck;
  ck.version = r.u32("version");
  if (ck.version != kCheckpointVersion) {
    throw UnsupportedVersionError("checkpoint version " + std::to_string(ck.version) + " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t header_len = r.u64("header length");
  try {
    ck.header = nlohmann::json::parse(r.str(header_len, "header"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeaderError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  const std::uint64_t count = r.u64("tensor count");
  if (count > bytes.size()) throw CorruptHeaderError("implausible tensor count");
  std::uint64_t previous_end = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    TableEntry e;
    e.name = r.str(r.u32("tensor name length"), "tensor name");
    const std::uint8_t dt = r.u8("dtype");
    if (dt > 1) throw CorruptHeaderError("tensor " + e.name + " has unknown dtype " + std::to_string(dt));
    e.dtype = static_cast<DType>(dt);
    const std::uint32_t ndim = r.u32("ndim");
    if (ndim > 8) throw CorruptHeaderError("tensor " + e.name + " has implausible rank");
    for (std::uint32_t d = 0; d < ndim; ++d) e.dims.push_back(r.u64("dims"));
    e.offset = r.u64("offset");
    e.length = r.u64("length");
    std::uint64_t n = 1;
    for (auto d : e.dims) n *= d;
    if (e.length != n * dtype_size(e.dtype)) throw CorruptHeaderError("tensor " + e.name + " length mismatch");
    if (e.offset < previous_end || (i > 0 && e.offset <= ck.table.back().offset)) {
      throw CorruptHeaderError("tensor offsets not strictly increasing at " + e.name);
    }
    previous_end = e.offset + e.length;
    ck.table.push_back(std::move(e));
  }
  const std::uint64_t payload_start = 4 + r.pos();
  for (const auto& e : ck.table) {
    if (e.offset < payload_start) throw CorruptHeaderError("tensor " + e.name + " overlaps the table");
    if (e.offset + e.length > bytes.size()) throw TruncatedPayloadError("payload of " + e.name + " is truncated");
    NamedTensor t{e.name, e.dtype, e.dims, {}};
    t.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(e.offset),
                   bytes.begin() + static_cast<std::ptrdiff_t>(e.offset + e.length));
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

// Model-level metadata stored in the JSON header.
struct CheckpointMeta {
  TrainConfig config{};
  double mel_reference = 0.0;  // 0 dB mel magnitude used when packing
  double stft_scale = 0.0;
  int secret_channels = 0;
  int depth = 1;
  std::vector<int> layers;  // layer indices present in this file
  long long steps = 0;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  nested::NestedStack<float> stack;
};

// Shape of a stack parameter named "block{i}/e{j}/conv{0|1}/{weight|bias}".
inline std::vector<std::uint64_t> parameter_dims(const inn::StackSpec& spec, const std::string& name) {
  const bool e1 = name.find("/e1/") != std::string::npos;
  const int in = e1 ? spec.secret_channels : spec.cover_channels;
  const int out = e1 ? spec.cover_channels : spec.secret_channels;
  const bool first = name.find("conv0/") != std::string::npos;
  const auto ci = static_cast<std::uint64_t>(first ? in : spec.hidden_channels);
  const auto co = static_cast<std::uint64_t>(first ? spec.hidden_channels : out);
  if (name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0) return {co};
  return {co, ci, 3, 3};
}

inline RawCheckpoint to_raw(const nested::NestedStack<float>& stack, const CheckpointMeta& meta) {
  RawCheckpoint ck;
  std::vector<int> present;
  for (int k = 1; k <= stack.depth(); ++k) {
    if (stack.has_layer(k)) present.push_back(k);
  }
  ck.header = {{"config", to_json(meta.config)},
               {"mel_reference", meta.mel_reference},
               {"stft_scale", meta.stft_scale},
               {"secret_channels", stack.secret_channels()},
               {"image_channels", stack.image_channels()},
               {"depth", stack.depth()},
               {"layers", present},
               {"steps", meta.steps}};
  for (int k : present) {
    const auto& layer = stack.layer(k);
    const std::string prefix = "layer" + std::to_string(k) + "/";
    layer.for_each_parameter([&](const std::string& name, std::span<const float> v) {
      NamedTensor t{prefix + name, DType::f32, parameter_dims(layer.spec(), "/" + name), {}};
      t.bytes.resize(v.size() * 4);
      for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint32_t u = 0;
        std::memcpy(&u, &v[i], 4);
        for (int j = 0; j < 4; ++j) t.bytes[i * 4 + j] = static_cast<std::uint8_t>(u >> (8 * j));
      }
      ck.tensors.push_back(std::move(t));
    });
  }
  return ck;
}

inline LoadedCheckpoint from_raw(const RawCheckpoint& ck) {
  LoadedCheckpoint out;
  int image_channels = 3;
  try {
    const auto& h = ck.header;
    out.meta.config = config_from_json(h.at("config"));
    out.meta.mel_reference = h.at("mel_reference").get<double>();
    out.meta.stft_scale = h.at("stft_scale").get<double>();
    out.meta.secret_channels = h.at("secret_channels").get<int>();
    image_channels = h.at("image_channels").get<int>();
    out.meta.depth = h.at("depth").get<int>();
    out.meta.layers = h.at("layers").get<std::vector<int>>();
    out.meta.steps = h.at("steps").get<long long>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeaderError(std::string("checkpoint header missing fields: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptHeaderError(std::string("checkpoint config snapshot invalid: ") + e.what());
  }
  const auto& cfg = out.meta.config;
  try {
    out.stack = nested::NestedStack<float>(out.meta.depth, out.meta.secret_channels, image_channels,
                                           cfg.hidden_channels, cfg.blocks);
  } catch (const Error& e) {
    throw CorruptHeaderError(std::string("checkpoint describes an invalid stack: ") + e.what());
  }
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : ck.tensors) by_name[t.name] = &t;
  for (int k = 1; k <= out.meta.depth; ++k) {
    const bool present = std::find(out.meta.layers.begin(), out.meta.layers.end(), k) != out.meta.layers.end();
    if (!present) {
      out.stack.drop_layer(k);
      continue;
    }
    auto& layer = out.stack.layer(k);
    const std::string prefix = "layer" + std::to_string(k) + "/";
    layer.for_each_parameter([&](const std::string& name, std::span<float> v) {
      const auto it = by_name.find(prefix + name);
      if (it == by_name.end()) throw CorruptHeaderError("checkpoint lacks tensor " + prefix + name);
      const NamedTensor& t = *it->second;
      if (t.dtype != DType::f32 || t.elements() != v.size() ||
          t.dims != parameter_dims(layer.spec(), "/" + name)) {
        throw CorruptHeaderError("tensor " + t.name + " has the wrong type or shape");
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint32_t u = 0;
        for (int j = 0; j < 4; ++j) u |= static_cast<std::uint32_t>(t.bytes[i * 4 + j]) << (8 * j);
        std::memcpy(&v[i], &u, 4);
      }
    });
  }
  return out;
}

inline void save_checkpoint(const std::filesystem::path& path, const nested::NestedStack<float>& stack,
                            const CheckpointMeta& meta) {
  atomic_write(path, encode_checkpoint(to_raw(stack, meta)));
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return from_raw(decode_checkpoint(bytes));
}

// Combines partial checkpoints of the same model (e.g. one file per layer).
inline LoadedCheckpoint merge_checkpoints(const std::vector<LoadedCheckpoint>& parts) {
  if (parts.empty()) throw InputError("no checkpoints to merge");
  LoadedCheckpoint out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.meta.depth != out.meta.depth || p.meta.secret_channels != out.meta.secret_channels ||
        p.stack.image_channels() != out.stack.image_channels()) {
      throw CheckpointError("checkpoints describe different models");
    }
    for (int k : p.meta.layers) {
      out.stack.set_layer(k, p.stack.layer(k));
      if (std::find(out.meta.layers.begin(), out.meta.layers.end(), k) == out.meta.layers.end()) {
        out.meta.layers.push_back(k);
      }
    }
  }
  std::sort(out.meta.layers.begin(), out.meta.layers.end());
  return out;
}

}  // namespace imgvox::train
