// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>

#include "imgvox/core/tensor.hpp"
#include "imgvox/nn/conv.hpp"

namespace imgvox::nn {

inline constexpr double kLeakySlope = 0.2;

struct SubnetSpec {
  int in_channels = 0;
  int out_channels = 0;
  int hidden_channels = 32;

  friend bool operator==(const SubnetSpec&, const SubnetSpec&) = default;
};

// Saved forward activations needed to backpropagate one Subnet call.
template <typename T>
struct SubnetTape {
  Tensor<T> input;
  Tensor<T> hidden;  // post-activation
};

// conv3x3 -> leaky ReLU -> conv3x3. Input and output share spatial size.
template <typename T>
class Subnet {
 public:
  Subnet() = default;
  explicit Subnet(const SubnetSpec& spec)
      : spec_(spec),
        first_(spec.in_channels, spec.hidden_channels),
        second_(spec.hidden_channels, spec.out_channels) {}

  const SubnetSpec& spec() const { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, SubnetTape<T>* tape = nullptr) const {
    Tensor<T> h = first_.forward(x);
    const T slope = static_cast<T>(kLeakySlope);
    for (auto& v : h.values()) v = v > T{0} ? v : v * slope;
    Tensor<T> y = second_.forward(h);
    if (tape != nullptr) {
      tape->input = x;
      tape->hidden = std::move(h);
    }
    return y;
  }

  Tensor<T> backward(const SubnetTape<T>& tape, const Tensor<T>& dy, Subnet& grad) const {
    Tensor<T> dh = second_.backward(tape.hidden, dy, grad.second_);
    const T slope = static_cast<T>(kLeakySlope);
    auto hv = tape.hidden.values();
    auto dv = dh.values();
    for (std::size_t i = 0; i < dv.size(); ++i) {
      if (!(hv[i] > T{0})) dv[i] *= slope;
    }
    return first_.backward(tape.input, dh, grad.first_);
  }

  // Hidden conv ~ N(0, std); the output conv starts at exactly zero, so a
  // fresh subnet maps everything to 0.
  template <typename Rng>
  void init(Rng& rng, double std) {
    std::normal_distribution<double> dist(0.0, std);
    for (auto& w : first_.weight) w = static_cast<T>(dist(rng));
    std::fill(first_.bias.begin(), first_.bias.end(), T{0});
    std::fill(second_.weight.begin(), second_.weight.end(), T{0});
    std::fill(second_.bias.begin(), second_.bias.end(), T{0});
  }

  // Visits (name, values) for every parameter array in a fixed order.
  void for_each_parameter(const std::function<void(const std::string&, std::span<T>)>& fn) {
    fn("conv0/weight", first_.weight);
    fn("conv0/bias", first_.bias);
    fn("conv1/weight", second_.weight);
    fn("conv1/bias", second_.bias);
  }
  void for_each_parameter(
      const std::function<void(const std::string&, std::span<const T>)>& fn) const {
    fn("conv0/weight", first_.weight);
    fn("conv0/bias", first_.bias);
    fn("conv1/weight", second_.weight);
    fn("conv1/bias", second_.bias);
  }

  Conv3x3<T>& hidden_conv() { return first_; }
  Conv3x3<T>& output_conv() { return second_; }
  const Conv3x3<T>& hidden_conv() const { return first_; }
  const Conv3x3<T>& output_conv() const { return second_; }

  friend bool operator==(const Subnet&, const Subnet&) = default;

 private:
  SubnetSpec spec_{};
  Conv3x3<T> first_;
  Conv3x3<T> second_;
};

}  // namespace imgvox::nn
