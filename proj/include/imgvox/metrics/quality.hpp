// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "imgvox/audio/stft.hpp"
#include "imgvox/audio/waveform.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"

namespace imgvox::metrics {

inline constexpr double kPsnrCap = 100.0;

// Peak signal-to-noise ratio for images in [0, 1]; identical inputs give the cap.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(b.shape(), a.shape(), "psnr");
  if (a.size() == 0) throw InputError("psnr of empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

// Rec. 601 luma for 3-channel input; single channels pass through.
template <typename T>
Eigen::MatrixXd luma(const Tensor<T>& x) {
  Eigen::MatrixXd out(x.height(), x.width());
  for (int y = 0; y < x.height(); ++y) {
    for (int c = 0; c < x.width(); ++c) {
      if (x.channels() >= 3) {
        out(y, c) = 0.299 * x(0, y, c) + 0.587 * x(1, y, c) + 0.114 * x(2, y, c);
      } else {
        out(y, c) = x(0, y, c);
      }
    }
  }
  return out;
}

inline std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - (size - 1) / 2.0;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter keeping only fully-covered ("valid") positions.
inline Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& m, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const Eigen::Index rows = m.rows() - n + 1;
  const Eigen::Index cols = m.cols() - n + 1;
  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(m.rows(), cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (int i = 0; i < n; ++i) tmp.col(c) += k[i] * m.col(c + i);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) out.row(r) += k[i] * tmp.row(r + i);
  }
  return out;
}

}  // namespace detail

// Mean structural similarity over all valid Gaussian windows of the luma.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimConfig& cfg = {}) {
  require_shape(b.shape(), a.shape(), "ssim");
  if (a.height() < cfg.window || a.width() < cfg.window) {
    throw InputError("ssim needs images of at least " + std::to_string(cfg.window) + "x" +
                     std::to_string(cfg.window) + ", got " + a.shape().str());
  }
  const Eigen::MatrixXd x = detail::luma(a);
  const Eigen::MatrixXd y = detail::luma(b);
  const auto k = detail::gaussian_kernel(cfg.window, cfg.sigma);
  const Eigen::MatrixXd mx = detail::filter_valid(x, k);
  const Eigen::MatrixXd my = detail::filter_valid(y, k);
  const Eigen::MatrixXd sxx = detail::filter_valid(x.cwiseProduct(x), k) - mx.cwiseProduct(mx);
  const Eigen::MatrixXd syy = detail::filter_valid(y.cwiseProduct(y), k) - my.cwiseProduct(my);
  const Eigen::MatrixXd sxy = detail::filter_valid(x.cwiseProduct(y), k) - mx.cwiseProduct(my);
  const double c1 = std::pow(cfg.k1 * cfg.dynamic_range, 2.0);
  const double c2 = std::pow(cfg.k2 * cfg.dynamic_range, 2.0);
  const Eigen::ArrayXXd num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
  const Eigen::ArrayXXd den =
      (mx.cwiseProduct(mx).array() + my.cwiseProduct(my).array() + c1) * (sxx.array() + syy.array() + c2);
  return (num / den).mean();
}

// Log-spectral distance in dB between two clips, over their common length.
// Each log spectrum is floored `range_db` below its own peak, then the
// per-frame RMS difference is RMS-averaged over frames.
inline double lsd(const audio::Waveform& a, const audio::Waveform& b, double range_db = 80.0) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) throw InputError("lsd: clips do not overlap");
  auto log_spec = [&](const audio::Waveform& w) {
    const Eigen::MatrixXd m = audio::stft(std::span<const float>(w.samples().data(), n)).bins.cwiseAbs();
    const double floor = std::max(m.maxCoeff() * std::pow(10.0, -range_db / 20.0), 1e-12);
    return (20.0 * m.cwiseMax(floor).array().log10()).matrix().eval();
  };
  const Eigen::MatrixXd da = log_spec(a);
  const Eigen::MatrixXd db = log_spec(b);
  double acc = 0.0;
  for (Eigen::Index t = 0; t < da.cols(); ++t) {
    acc += (da.col(t) - db.col(t)).squaredNorm() / static_cast<double>(da.rows());
  }
  return std::sqrt(acc / static_cast<double>(da.cols()));
}

}  // namespace imgvox::metrics
