// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "imgvox/core/error.hpp"

namespace imgvox::audio {

namespace detail {

inline double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
// Output length is ceil(n * to / from).
inline std::vector<float> resample(std::span<const float> in, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw InputError("sample rates must be positive");
  if (from_rate == to_rate) return {in.begin(), in.end()};
  const long g = std::gcd(from_rate, to_rate);
  const long up = to_rate / g;    // L
  const long down = from_rate / g;  // M

  constexpr int kZeroCrossings = 16;
  constexpr double kBeta = 8.6;
  const double cutoff = 0.95 * std::min(1.0, static_cast<double>(up) / down);
  const double half_width = kZeroCrossings / cutoff;
  const long taps = static_cast<long>(std::ceil(half_width));

  // table[p][k + taps - 1] = g(p / L - k) for k in [-taps + 1, taps]
  const long span_len = 2 * taps;
  std::vector<double> table(static_cast<std::size_t>(up * span_len));
  const double i0_beta = detail::bessel_i0(kBeta);
  for (long p = 0; p < up; ++p) {
    for (long k = -taps + 1; k <= taps; ++k) {
      const double tau = static_cast<double>(p) / up - k;
      double v = 0.0;
      if (std::abs(tau) <= half_width) {
        const double r = tau / half_width;
        const double win = detail::bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
        v = cutoff * detail::sinc(cutoff * tau) * win;
      }
      table[static_cast<std::size_t>(p * span_len + k + taps - 1)] = v;
    }
  }

  const std::size_t n_in = in.size();
  const std::size_t n_out = static_cast<std::size_t>((n_in * up + down - 1) / down);
  std::vector<float> out(n_out);
  for (std::size_t n = 0; n < n_out; ++n) {
    const long long pos = static_cast<long long>(n) * down;
    const long long q = pos / up;
    const long p = static_cast<long>(pos % up);
    const double* row = table.data() + p * span_len;
    double acc = 0.0;
    for (long k = -taps + 1; k <= taps; ++k) {
      const long long j = q + k;
      if (j < 0 || j >= static_cast<long long>(n_in)) continue;
      acc += in[static_cast<std::size_t>(j)] * row[k + taps - 1];
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace imgvox::audio
