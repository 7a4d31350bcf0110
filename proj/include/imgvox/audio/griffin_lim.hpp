// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "imgvox/audio/stft.hpp"

namespace imgvox::audio {

struct GriffinLimConfig {
  int iterations = 60;
  double momentum = 0.99;
  std::uint64_t seed = 0;  // initial phases
};

// Fast Griffin-Lim (momentum-accelerated phase retrieval). `magnitude` is
// bins x frames for `cfg`; returns `length` samples. When `convergence` is
// non-null it receives ||(|STFT(x_i)| - S)|| / ||S|| for every iteration i.
inline std::vector<float> griffin_lim(const Eigen::MatrixXd& magnitude, const StftConfig& cfg,
                                      std::size_t length, const GriffinLimConfig& gl = {},
                                      std::vector<double>* convergence = nullptr) {
  const Eigen::Index bins = magnitude.rows();
  const Eigen::Index frames = magnitude.cols();
  if (convergence != nullptr) convergence->clear();
  const double norm = magnitude.norm();
  if (norm == 0.0 || length == 0) {
    if (convergence != nullptr) convergence->assign(static_cast<std::size_t>(gl.iterations), 0.0);
    return std::vector<float>(length, 0.0f);
  }

  std::mt19937_64 rng(gl.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  ComplexMatrix angles(bins, frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index k = 0; k < bins; ++k) angles(k, t) = std::polar(1.0, phase(rng));
  }

  const double alpha = gl.momentum / (1.0 + gl.momentum);
  ComplexMatrix rebuilt = ComplexMatrix::Zero(bins, frames);
  for (int it = 0; it < gl.iterations; ++it) {
    const ComplexMatrix previous = rebuilt;
    const std::vector<float> signal = istft(magnitude.cast<std::complex<double>>().cwiseProduct(angles),
                                            cfg, length);
    rebuilt = stft(std::span<const float>(signal), cfg).bins;
    if (rebuilt.cols() != frames) {
      throw InputError("griffin_lim: magnitude has " + std::to_string(frames) +
                       " frames but the target length gives " + std::to_string(rebuilt.cols()));
    }
    if (convergence != nullptr) {
      convergence->push_back((rebuilt.cwiseAbs() - magnitude).norm() / norm);
    }
    angles = rebuilt - alpha * previous;
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (Eigen::Index k = 0; k < bins; ++k) {
        const double a = std::abs(angles(k, t));
        angles(k, t) = a > 1e-16 ? angles(k, t) / a : std::complex<double>(1.0, 0.0);
      }
    }
  }
  return istft(magnitude.cast<std::complex<double>>().cwiseProduct(angles), cfg, length);
}

}  // namespace imgvox::audio
