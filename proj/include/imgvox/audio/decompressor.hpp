// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "imgvox/audio/mel.hpp"
#include "imgvox/core/error.hpp"

namespace imgvox::audio {

inline constexpr const char* kDefaultDecompressor = "griffin-lim";

using DecompressFn = std::function<Waveform(const MelSpectrogram&)>;

// Named mel-to-waveform back ends. "griffin-lim" is always present; an
// external vocoder can be registered under another name.
class DecompressorRegistry {
 public:
  DecompressorRegistry() {
    plugins_[kDefaultDecompressor] = [](const MelSpectrogram& mel) { return mel_decompress(mel); };
  }

  void add(const std::string& name, DecompressFn fn) {
    if (name.empty() || !fn) throw ConfigError("decompressor needs a name and a callable");
    plugins_[name] = std::move(fn);
  }

  bool contains(const std::string& name) const { return plugins_.count(name) != 0; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, fn] : plugins_) out.push_back(name);
    return out;
  }

  Waveform decompress(const MelSpectrogram& mel,
                      const std::string& name = kDefaultDecompressor) const {
    const auto it = plugins_.find(name);
    if (it == plugins_.end()) throw ConfigError("no decompressor named '" + name + "'");
    try {
      return it->second(mel);
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw DecompressionError("decompressor '" + name + "' failed: " + e.what());
    }
  }

 private:
  std::map<std::string, DecompressFn> plugins_;
};

}  // namespace imgvox::audio
