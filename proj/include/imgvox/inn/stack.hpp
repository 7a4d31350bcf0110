// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"
#include "imgvox/inn/coupling.hpp"

namespace imgvox::inn {

inline constexpr int kDefaultBlocks = 8;
inline constexpr double kInitStd = 0.02;

template <typename T>
struct EmbedResult {
  Tensor<T> container;  // image branch after the last block
  Tensor<T> latent;     // secret branch after the last block; not shipped
};

template <typename T>
struct RevealResult {
  Tensor<T> secret;
  Tensor<T> cover;
};

template <typename T>
struct StackForwardTape {
  std::vector<CouplingForwardTape<T>> blocks;
};

template <typename T>
struct StackInverseTape {
  std::vector<CouplingInverseTape<T>> blocks;  // indexed by block, not by visit order
};

struct StackSpec {
  int cover_channels = 3;
  int secret_channels = 2;
  int hidden_channels = 32;
  int blocks = kDefaultBlocks;

  friend bool operator==(const StackSpec&, const StackSpec&) = default;
};

// Invertible embedding network: a chain of coupling blocks that hides a
// secret tensor in a cover image (forward) and recovers both (inverse).
template <typename T>
class INNStack {
 public:
  INNStack() = default;
  explicit INNStack(const StackSpec& spec) : spec_(spec) {
    if (spec.cover_channels <= 0 || spec.secret_channels <= 0 || spec.blocks <= 0 ||
        spec.hidden_channels <= 0) {
      throw InputError("stack spec needs positive channel and block counts");
    }
    blocks_.reserve(spec.blocks);
    for (int i = 0; i < spec.blocks; ++i) {
      blocks_.emplace_back(spec.cover_channels, spec.secret_channels, spec.hidden_channels);
    }
  }

  const StackSpec& spec() const { return spec_; }
  int cover_channels() const { return spec_.cover_channels; }
  int secret_channels() const { return spec_.secret_channels; }
  std::size_t block_count() const { return blocks_.size(); }
  CouplingBlock<T>& block(std::size_t i) { return blocks_.at(i); }
  const CouplingBlock<T>& block(std::size_t i) const { return blocks_.at(i); }

  // Hidden convs ~ N(0, 0.02), output convs zero, so a fresh stack passes the
  // cover through unchanged. Deterministic in `seed`.
  void init_weights(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& b : blocks_) b.init(rng, kInitStd);
  }

  EmbedResult<T> forward_embed(const Tensor<T>& cover, const Tensor<T>& secret,
                               StackForwardTape<T>* tape = nullptr) const {
    check_pair(cover, secret, "forward_embed");
    if (tape != nullptr) tape->blocks.assign(blocks_.size(), {});
    BranchPair<T> state{cover, secret};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      state = blocks_[i].forward(state.cover, state.secret, tape ? &tape->blocks[i] : nullptr);
    }
    return {std::move(state.cover), std::move(state.secret)};
  }

  RevealResult<T> backward_reveal(const Tensor<T>& container, const Tensor<T>& latent_seed,
                                  StackInverseTape<T>* tape = nullptr) const {
    check_pair(container, latent_seed, "backward_reveal");
    if (tape != nullptr) tape->blocks.assign(blocks_.size(), {});
    BranchPair<T> state{container, latent_seed};
    for (std::size_t i = blocks_.size(); i-- > 0;) {
      state = blocks_[i].inverse(state.cover, state.secret, tape ? &tape->blocks[i] : nullptr);
    }
    return {std::move(state.secret), std::move(state.cover)};
  }

  // Reveal from the container alone: the secret branch is seeded with zeros.
  RevealResult<T> reveal_deployed(const Tensor<T>& container,
                                  StackInverseTape<T>* tape = nullptr) const {
    return backward_reveal(container, zero_latent(container), tape);
  }

  Tensor<T> zero_latent(const Tensor<T>& container) const {
    return Tensor<T>(spec_.secret_channels, container.height(), container.width());
  }

  // dL/d(container, latent) -> dL/d(cover, secret).
  BranchPair<T> backward_through_embed(const StackForwardTape<T>& tape, Tensor<T> d_container,
                                       Tensor<T> d_latent, INNStack& grad) const {
    BranchPair<T> g{std::move(d_container), std::move(d_latent)};
    for (std::size_t i = blocks_.size(); i-- > 0;) {
      g = blocks_[i].backward_forward(tape.blocks[i], g.cover, g.secret, grad.blocks_[i]);
    }
    return g;
  }

  // dL/d(revealed secret, revealed cover) -> dL/d(container, latent seed).
  BranchPair<T> backward_through_reveal(const StackInverseTape<T>& tape, Tensor<T> d_secret,
                                        Tensor<T> d_cover, INNStack& grad) const {
    BranchPair<T> g{std::move(d_cover), std::move(d_secret)};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      g = blocks_[i].backward_inverse(tape.blocks[i], g.cover, g.secret, grad.blocks_[i]);
    }
    return g;
  }

  // A zero-weight stack of identical layout, used as a gradient accumulator.
  INNStack zeros_like() const { return INNStack(spec_); }

  void for_each_parameter(const std::function<void(const std::string&, std::span<T>)>& fn) {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const std::string prefix = "block" + std::to_string(i) + "/";
      blocks_[i].for_each_parameter(
          [&](const std::string& name, std::span<T> v) { fn(prefix + name, v); });
    }
  }
  void for_each_parameter(
      const std::function<void(const std::string&, std::span<const T>)>& fn) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const std::string prefix = "block" + std::to_string(i) + "/";
      blocks_[i].for_each_parameter(
          [&](const std::string& name, std::span<const T> v) { fn(prefix + name, v); });
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_parameter([&n](const std::string&, std::span<const T> v) { n += v.size(); });
    return n;
  }

  friend bool operator==(const INNStack&, const INNStack&) = default;

 private:
  void check_pair(const Tensor<T>& cover, const Tensor<T>& secret, const char* what) const {
    if (cover.channels() != spec_.cover_channels) {
      throw InputError(std::string(what) + ": cover has " + std::to_string(cover.channels()) +
                       " channels, stack expects " + std::to_string(spec_.cover_channels));
    }
    if (secret.channels() != spec_.secret_channels) {
      throw InputError(std::string(what) + ": secret has " + std::to_string(secret.channels()) +
                       " channels, stack expects " + std::to_string(spec_.secret_channels));
    }
    if (cover.height() != secret.height() || cover.width() != secret.width()) {
      throw InputError(std::string(what) + ": spatial mismatch " + cover.shape().str() + " vs " +
                       secret.shape().str());
    }
  }

  StackSpec spec_{};
  std::vector<CouplingBlock<T>> blocks_;
};

}  // namespace imgvox::inn
