// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "imgvox/core/error.hpp"

namespace imgvox::audio {

inline constexpr int kSampleRate = 16000;

// Samples below this magnitude are flushed to zero on construction. At
// -174 dBFS they are below the resolution of any PCM format, and keeping
// them out makes the raw packing map (x + 1) / 2 exact in double precision.
inline constexpr float kFlushThreshold = 1.0f / 536870912.0f;  // 2^-29

// Mono 16 kHz audio with finite samples clipped to [-1, 1].
class Waveform {
 public:
  Waveform() = default;
  explicit Waveform(std::vector<float> samples, int sample_rate = kSampleRate)
      : samples_(std::move(samples)) {
    if (sample_rate != kSampleRate) {
      throw InputError("waveform must be at " + std::to_string(kSampleRate) + " Hz, got " +
                       std::to_string(sample_rate) + " (resample on load)");
    }
    for (auto& s : samples_) {
      if (!std::isfinite(s)) throw InputError("waveform contains a non-finite sample");
      s = std::clamp(s, -1.0f, 1.0f);
      if (std::abs(s) < kFlushThreshold) s = 0.0f;
    }
  }

  static Waveform silence(std::size_t n) { return Waveform(std::vector<float>(n, 0.0f)); }

  std::span<const float> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int sample_rate() const { return kSampleRate; }
  double duration_s() const { return static_cast<double>(samples_.size()) / kSampleRate; }

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  std::vector<float> samples_;
};

inline std::size_t samples_for_duration(double seconds) {
  return static_cast<std::size_t>(std::llround(seconds * kSampleRate));
}

// Crops or zero-pads to exactly n samples.
inline Waveform fit_length(const Waveform& w, std::size_t n) {
  std::vector<float> out(n, 0.0f);
  std::copy_n(w.samples().begin(), std::min(n, w.size()), out.begin());
  return Waveform(std::move(out));
}

}  // namespace imgvox::audio
