// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <string>

#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"

namespace imgvox::train {

struct LossWeights {
  double container = 32.0;  // container vs cover
  double cover = 1.0;       // revealed cover vs cover
  double secret = 32.0;     // revealed secret vs secret

  void validate() const {
    if (!(container >= 0.0 && cover >= 0.0 && secret >= 0.0)) {
      throw ConfigError("loss weights must be non-negative");
    }
  }
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossReport {
  double container = 0.0;  // unweighted MSE terms
  double cover = 0.0;
  double secret = 0.0;
  double total = 0.0;

  LossReport& operator+=(const LossReport& o) {
    container += o.container;
    cover += o.cover;
    secret += o.secret;
    total += o.total;
    return *this;
  }
  LossReport scaled(double s) const { return {container * s, cover * s, secret * s, total * s}; }
};

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b, const std::string& what = "mse") {
  require_shape(a.shape(), b.shape(), what);
  if (a.size() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

// d/da of weight * MSE(a, b).
template <typename T>
Tensor<T> mse_grad(const Tensor<T>& a, const Tensor<T>& b, double weight) {
  Tensor<T> g(a.shape());
  const double k = a.size() == 0 ? 0.0 : 2.0 * weight / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    g[i] = static_cast<T>(k * (static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return g;
}

template <typename T>
LossReport loss_total(const Tensor<T>& container, const Tensor<T>& cover,
                      const Tensor<T>& revealed_cover, const Tensor<T>& revealed_secret,
                      const Tensor<T>& secret, const LossWeights& w = {}) {
  LossReport r;
  r.container = mse(container, cover, "container vs cover");
  r.cover = mse(revealed_cover, cover, "revealed cover vs cover");
  r.secret = mse(revealed_secret, secret, "revealed secret vs secret");
  r.total = w.container * r.container + w.cover * r.cover + w.secret * r.secret;
  return r;
}

}  // namespace imgvox::train
