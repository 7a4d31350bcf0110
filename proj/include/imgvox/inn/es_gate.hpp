// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>

#include "imgvox/core/tensor.hpp"

namespace imgvox::inn {

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

// exp(sigmoid(x)): a multiplier confined to [1, e], so dividing by it in the
// reveal direction never amplifies error.
template <typename T>
T es_gate(T x) {
  return std::exp(sigmoid(x));
}

// d/dx exp(sigmoid(x)) = exp(s) * s * (1 - s), s = sigmoid(x).
template <typename T>
T es_gate_derivative(T x) {
  const T s = sigmoid(x);
  return std::exp(s) * s * (T{1} - s);
}

template <typename T>
Tensor<T> es_gate(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = es_gate(x[i]);
  return out;
}

}  // namespace imgvox::inn
