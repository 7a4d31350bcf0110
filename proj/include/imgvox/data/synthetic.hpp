// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "imgvox/audio/waveform.hpp"
#include "imgvox/core/tensor.hpp"

// Deterministic stand-ins for face photos and speech clips, used by tests,
// the acceptance harness and the demos when no corpus is at hand.
namespace imgvox::data::synthetic {

// Voiced "syllables": a glottal-like harmonic series with drifting pitch,
// shaped by two moving formant resonances and a syllable-rate envelope.
inline audio::Waveform speech_like(double seconds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = audio::samples_for_duration(seconds);
  std::vector<float> out(n, 0.0f);
  const double sr = audio::kSampleRate;
  const double f0_base = 90.0 + 140.0 * u(rng);
  const double syll_rate = 3.0 + 2.5 * u(rng);
  const double f1a = 350.0 + 400.0 * u(rng), f1b = 500.0 + 500.0 * u(rng);
  const double f2a = 1000.0 + 800.0 * u(rng), f2b = 1400.0 + 1000.0 * u(rng);
  const double pitch_jitter = 2.0 * M_PI * u(rng);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f0 = f0_base * (1.0 + 0.12 * std::sin(2.0 * M_PI * 0.7 * t + pitch_jitter));
    phase += 2.0 * M_PI * f0 / sr;
    const double mix = 0.5 + 0.5 * std::sin(2.0 * M_PI * syll_rate * 0.5 * t);
    const double f1 = f1a + (f1b - f1a) * mix;
    const double f2 = f2a + (f2b - f2a) * (1.0 - mix);
    double s = 0.0;
    for (int h = 1; h * f0 < 7000.0 && h <= 40; ++h) {
      const double fh = h * f0;
      const double r1 = 1.0 / (1.0 + std::pow((fh - f1) / 120.0, 2.0));
      const double r2 = 0.6 / (1.0 + std::pow((fh - f2) / 180.0, 2.0));
      s += (r1 + r2 + 0.02) / std::sqrt(static_cast<double>(h)) * std::sin(h * phase);
    }
    const double env = std::pow(std::max(0.0, std::sin(M_PI * syll_rate * t)), 2.0);
    out[i] = static_cast<float>(0.25 * env * s);
  }
  float peak = 0.0f;
  for (float v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0f) {
    for (auto& v : out) v *= 0.8f / peak;
  }
  return audio::Waveform(std::move(out));
}

// A centered face-like pattern: graded background, skin-toned ellipse, hair
// band, darker eyes and mouth, plus mild texture noise. RGB in [0, 1].
inline Tensor<float> face_like(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.015);
  Tensor<float> img(3, size, size);
  const double bg[3] = {0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)};
  const double skin[3] = {0.75 + 0.2 * u(rng), 0.55 + 0.2 * u(rng), 0.45 + 0.2 * u(rng)};
  const double hair[3] = {0.1 + 0.3 * u(rng), 0.07 + 0.2 * u(rng), 0.05 + 0.15 * u(rng)};
  const double cx = 0.5 + 0.05 * (u(rng) - 0.5), cy = 0.52 + 0.05 * (u(rng) - 0.5);
  const double rx = 0.28 + 0.05 * u(rng), ry = 0.36 + 0.05 * u(rng);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double fx = (x + 0.5) / size, fy = (y + 0.5) / size;
      const double d = std::pow((fx - cx) / rx, 2.0) + std::pow((fy - cy) / ry, 2.0);
      double px[3];
      for (int c = 0; c < 3; ++c) px[c] = bg[c] * (0.8 + 0.4 * fy);
      if (d < 1.0) {
        const double shade = 1.0 - 0.25 * d;
        for (int c = 0; c < 3; ++c) px[c] = skin[c] * shade;
        if (fy < cy - 0.6 * ry) {
          for (int c = 0; c < 3; ++c) px[c] = hair[c];
        }
        for (double ex : {cx - 0.4 * rx, cx + 0.4 * rx}) {
          if (std::pow((fx - ex) / 0.05, 2.0) + std::pow((fy - (cy - 0.15 * ry)) / 0.03, 2.0) < 1.0) {
            for (int c = 0; c < 3; ++c) px[c] = 0.15;
          }
        }
        if (std::pow((fx - cx) / 0.12, 2.0) + std::pow((fy - (cy + 0.5 * ry)) / 0.025, 2.0) < 1.0) {
          px[0] = 0.6, px[1] = 0.25, px[2] = 0.25;
        }
      }
      for (int c = 0; c < 3; ++c) {
        img(c, y, x) = static_cast<float>(std::clamp(px[c] + noise(rng), 0.0, 1.0));
      }
    }
  }
  return img;
}

}  // namespace imgvox::data::synthetic
