// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "imgvox/audio/waveform.hpp"
#include "imgvox/core/error.hpp"

namespace imgvox::audio {

struct StftConfig {
  int n_fft = 1024;
  int hop = 256;
  int win_length = 1024;
  bool center = true;  // reflect-pad n_fft/2 on both sides

  int bins() const { return n_fft / 2 + 1; }
};

using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

// One-sided spectrum, bins x frames.
struct StftSpec {
  ComplexMatrix bins;
  StftConfig config;

  Eigen::Index frames() const { return bins.cols(); }
};

// Periodic Hann, zero-padded (centered) to n_fft when win_length < n_fft.
inline std::vector<double> hann_window(const StftConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.n_fft), 0.0);
  const int offset = (cfg.n_fft - cfg.win_length) / 2;
  for (int i = 0; i < cfg.win_length; ++i) {
    w[offset + i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / cfg.win_length);
  }
  return w;
}

// Frame count for n samples: 1 + floor(n / hop) with centering.
inline std::size_t stft_frames(std::size_t n, const StftConfig& cfg = {}) {
  if (cfg.center) return 1 + n / cfg.hop;
  if (n < static_cast<std::size_t>(cfg.n_fft)) return 0;
  return 1 + (n - cfg.n_fft) / cfg.hop;
}

namespace detail {

// Index into x after reflecting about both ends (no edge repeat), valid for
// any offset even when the pad exceeds the signal length.
inline std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * static_cast<long long>(n) - 2;
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace detail

inline StftSpec stft(std::span<const float> x, const StftConfig& cfg = {}) {
  if (x.empty()) throw InputError("stft of an empty waveform");
  if (cfg.hop <= 0 || cfg.n_fft <= 0 || cfg.win_length > cfg.n_fft) {
    throw InputError("invalid stft configuration");
  }
  const std::size_t n = x.size();
  const std::size_t frames = stft_frames(n, cfg);
  const auto window = hann_window(cfg);
  const long long pad = cfg.center ? cfg.n_fft / 2 : 0;

  StftSpec spec{ComplexMatrix(cfg.bins(), static_cast<Eigen::Index>(frames)), cfg};
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(cfg.n_fft));
  std::vector<std::complex<double>> out;
  for (std::size_t t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t) * cfg.hop - pad;
    for (int i = 0; i < cfg.n_fft; ++i) {
      const long long j = start + i;
      double v = 0.0;
      if (cfg.center) {
        v = x[detail::reflect_index(j, n)];
      } else if (j >= 0 && j < static_cast<long long>(n)) {
        v = x[static_cast<std::size_t>(j)];
      }
      frame[i] = v * window[i];
    }
    fft.fwd(out, frame);
    for (int k = 0; k < cfg.bins(); ++k) spec.bins(k, static_cast<Eigen::Index>(t)) = out[k];
  }
  return spec;
}

inline StftSpec stft(const Waveform& w, const StftConfig& cfg = {}) { return stft(w.samples(), cfg); }

// Weighted overlap-add inverse. Samples whose summed squared window falls
// below `min_window_sum` (uncovered when hop > window) come back as zero.
inline std::vector<float> istft(const ComplexMatrix& bins, const StftConfig& cfg, std::size_t length,
                                double min_window_sum = 1e-8) {
  const auto window = hann_window(cfg);
  const std::size_t frames = static_cast<std::size_t>(bins.cols());
  const std::size_t pad = cfg.center ? static_cast<std::size_t>(cfg.n_fft / 2) : 0;
  const std::size_t full = frames == 0 ? 0 : (frames - 1) * cfg.hop + cfg.n_fft;
  std::vector<double> acc(full, 0.0);
  std::vector<double> wsum(full, 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> half(static_cast<std::size_t>(cfg.bins()));
  std::vector<double> frame;
  for (std::size_t t = 0; t < frames; ++t) {
    for (int k = 0; k < cfg.bins(); ++k) half[k] = bins(k, static_cast<Eigen::Index>(t));
    fft.inv(frame, half, cfg.n_fft);
    const std::size_t start = t * cfg.hop;
    for (int i = 0; i < cfg.n_fft; ++i) {
      acc[start + i] += frame[i] * window[i];
      wsum[start + i] += window[i] * window[i];
    }
  }
  std::vector<float> out(length, 0.0f);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t j = i + pad;
    if (j < full && wsum[j] > min_window_sum) out[i] = static_cast<float>(acc[j] / wsum[j]);
  }
  return out;
}

inline Eigen::MatrixXd magnitude(const ComplexMatrix& m) { return m.cwiseAbs(); }

}  // namespace imgvox::audio
