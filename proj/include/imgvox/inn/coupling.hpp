// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>

#include "imgvox/core/tensor.hpp"
#include "imgvox/inn/es_gate.hpp"
#include "imgvox/nn/subnet.hpp"

namespace imgvox::inn {

template <typename T>
struct BranchPair {
  Tensor<T> cover;   // image branch
  Tensor<T> secret;  // secret branch
};

template <typename T>
struct CouplingForwardTape {
  nn::SubnetTape<T> e1, e2, e3;
  Tensor<T> secret_in;
  Tensor<T> sig;   // sigmoid(E3(cover_out))
  Tensor<T> gate;  // exp(sig)
};

template <typename T>
struct CouplingInverseTape {
  nn::SubnetTape<T> e1, e2, e3;
  Tensor<T> secret_out;  // the recovered secret-branch input
  Tensor<T> sig;
  Tensor<T> gate;
};

// One affine coupling block.
//
//   forward:  cover'  = cover + E1(secret)
//             secret' = secret * ES(E3(cover')) + E2(cover')
//   inverse:  secret  = (secret' - E2(cover')) / ES(E3(cover'))
//             cover   = cover' - E1(secret)
//
// ES(x) = exp(sigmoid(x)). The inverse is exact for any weights.
template <typename T>
class CouplingBlock {
 public:
  CouplingBlock() = default;
  CouplingBlock(int cover_channels, int secret_channels, int hidden_channels = 32)
      : cover_channels_(cover_channels),
        secret_channels_(secret_channels),
        e1_(nn::SubnetSpec{secret_channels, cover_channels, hidden_channels}),
        e2_(nn::SubnetSpec{cover_channels, secret_channels, hidden_channels}),
        e3_(nn::SubnetSpec{cover_channels, secret_channels, hidden_channels}) {}

  int cover_channels() const { return cover_channels_; }
  int secret_channels() const { return secret_channels_; }

  BranchPair<T> forward(const Tensor<T>& cover, const Tensor<T>& secret,
                        CouplingForwardTape<T>* tape = nullptr) const {
    check(cover, secret);
    Tensor<T> cover_out = cover + e1_.forward(secret, tape ? &tape->e1 : nullptr);
    Tensor<T> s = e3_.forward(cover_out, tape ? &tape->e3 : nullptr);
    Tensor<T> t = e2_.forward(cover_out, tape ? &tape->e2 : nullptr);
    Tensor<T> sig(s.shape());
    Tensor<T> gate(s.shape());
    Tensor<T> secret_out(secret.shape());
    for (std::size_t i = 0; i < s.size(); ++i) {
      sig[i] = sigmoid(s[i]);
      gate[i] = std::exp(sig[i]);
      secret_out[i] = secret[i] * gate[i] + t[i];
    }
    if (tape != nullptr) {
      tape->secret_in = secret;
      tape->sig = std::move(sig);
      tape->gate = std::move(gate);
    }
    return {std::move(cover_out), std::move(secret_out)};
  }

  BranchPair<T> inverse(const Tensor<T>& cover_out, const Tensor<T>& secret_out,
                        CouplingInverseTape<T>* tape = nullptr) const {
    check(cover_out, secret_out);
    Tensor<T> s = e3_.forward(cover_out, tape ? &tape->e3 : nullptr);
    Tensor<T> t = e2_.forward(cover_out, tape ? &tape->e2 : nullptr);
    Tensor<T> sig(s.shape());
    Tensor<T> gate(s.shape());
    Tensor<T> secret(secret_out.shape());
    for (std::size_t i = 0; i < s.size(); ++i) {
      sig[i] = sigmoid(s[i]);
      gate[i] = std::exp(sig[i]);
      secret[i] = (secret_out[i] - t[i]) / gate[i];
    }
    Tensor<T> cover = cover_out - e1_.forward(secret, tape ? &tape->e1 : nullptr);
    if (tape != nullptr) {
      tape->secret_out = secret;
      tape->sig = std::move(sig);
      tape->gate = std::move(gate);
    }
    return {std::move(cover), std::move(secret)};
  }

  // Backpropagates through forward(): takes dL/d(cover', secret') and returns
  // dL/d(cover, secret), accumulating parameter gradients into `grad`.
  BranchPair<T> backward_forward(const CouplingForwardTape<T>& tape, const Tensor<T>& d_cover_out,
                                 const Tensor<T>& d_secret_out, CouplingBlock& grad) const {
    Tensor<T> d_secret(d_secret_out.shape());
    Tensor<T> ds(d_secret_out.shape());
    for (std::size_t i = 0; i < d_secret.size(); ++i) {
      d_secret[i] = d_secret_out[i] * tape.gate[i];
      const T dgate = d_secret_out[i] * tape.secret_in[i];
      ds[i] = dgate * tape.gate[i] * tape.sig[i] * (T{1} - tape.sig[i]);
    }
    Tensor<T> d_cover = d_cover_out;
    d_cover += e2_.backward(tape.e2, d_secret_out, grad.e2_);
    d_cover += e3_.backward(tape.e3, ds, grad.e3_);
    d_secret += e1_.backward(tape.e1, d_cover, grad.e1_);
    return {std::move(d_cover), std::move(d_secret)};
  }

  // Backpropagates through inverse(): takes dL/d(cover, secret) and returns
  // dL/d(cover', secret').
  BranchPair<T> backward_inverse(const CouplingInverseTape<T>& tape, const Tensor<T>& d_cover,
                                 const Tensor<T>& d_secret, CouplingBlock& grad) const {
    // cover = cover' - E1(secret)
    Tensor<T> d_secret_total = d_secret;
    {
      Tensor<T> neg = d_cover;
      neg *= T{-1};
      d_secret_total += e1_.backward(tape.e1, neg, grad.e1_);
    }
    Tensor<T> d_cover_out = d_cover;
    Tensor<T> d_secret_out(d_secret.shape());
    Tensor<T> dt(d_secret.shape());
    Tensor<T> ds(d_secret.shape());
    for (std::size_t i = 0; i < d_secret.size(); ++i) {
      const T g = d_secret_total[i] / tape.gate[i];
      d_secret_out[i] = g;
      dt[i] = -g;
      // d secret / d gate = -secret / gate; d gate / d s = gate * sig * (1 - sig)
      ds[i] = -d_secret_total[i] * tape.secret_out[i] * tape.sig[i] * (T{1} - tape.sig[i]);
    }
    d_cover_out += e2_.backward(tape.e2, dt, grad.e2_);
    d_cover_out += e3_.backward(tape.e3, ds, grad.e3_);
    return {std::move(d_cover_out), std::move(d_secret_out)};
  }

  template <typename Rng>
  void init(Rng& rng, double std) {
    e1_.init(rng, std);
    e2_.init(rng, std);
    e3_.init(rng, std);
  }

  void for_each_parameter(const std::function<void(const std::string&, std::span<T>)>& fn) {
    e1_.for_each_parameter([&](const std::string& n, std::span<T> v) { fn("e1/" + n, v); });
    e2_.for_each_parameter([&](const std::string& n, std::span<T> v) { fn("e2/" + n, v); });
    e3_.for_each_parameter([&](const std::string& n, std::span<T> v) { fn("e3/" + n, v); });
  }
  void for_each_parameter(
      const std::function<void(const std::string&, std::span<const T>)>& fn) const {
    using Fn = std::function<void(const std::string&, std::span<const T>)>;
    e1_.for_each_parameter(Fn([&](const std::string& n, std::span<const T> v) { fn("e1/" + n, v); }));
    e2_.for_each_parameter(Fn([&](const std::string& n, std::span<const T> v) { fn("e2/" + n, v); }));
    e3_.for_each_parameter(Fn([&](const std::string& n, std::span<const T> v) { fn("e3/" + n, v); }));
  }

  nn::Subnet<T>& e1() { return e1_; }
  nn::Subnet<T>& e2() { return e2_; }
  nn::Subnet<T>& e3() { return e3_; }
  const nn::Subnet<T>& e1() const { return e1_; }
  const nn::Subnet<T>& e2() const { return e2_; }
  const nn::Subnet<T>& e3() const { return e3_; }

  friend bool operator==(const CouplingBlock&, const CouplingBlock&) = default;

 private:
  void check(const Tensor<T>& cover, const Tensor<T>& secret) const {
    if (cover.channels() != cover_channels_ || secret.channels() != secret_channels_) {
      throw InputError("coupling block expects (" + std::to_string(cover_channels_) + ", " +
                       std::to_string(secret_channels_) + ") channels, got (" +
                       std::to_string(cover.channels()) + ", " +
                       std::to_string(secret.channels()) + ")");
    }
    if (cover.height() != secret.height() || cover.width() != secret.width()) {
      throw InputError("cover " + cover.shape().str() + " and secret " + secret.shape().str() +
                       " differ spatially");
    }
  }

  int cover_channels_ = 0;
  int secret_channels_ = 0;
  nn::Subnet<T> e1_;
  nn::Subnet<T> e2_;
  nn::Subnet<T> e3_;
};

}  // namespace imgvox::inn
