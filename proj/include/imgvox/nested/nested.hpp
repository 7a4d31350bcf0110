// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"
#include "imgvox/inn/stack.hpp"

namespace imgvox::nested {

inline constexpr int kMaxDepth = 4;

// Cascade of embedding stacks. Layer 1 hides an audio tensor in the image;
// layer k >= 2 hides audio inside the audio carried by layer k - 1. Layers are
// 1-based. A holder may own only a prefix of the layers.
template <typename T>
class NestedStack {
 public:
  NestedStack() = default;
  NestedStack(int depth, int secret_channels, int image_channels = 3, int hidden_channels = 32,
              int blocks = inn::kDefaultBlocks)
      : secret_channels_(secret_channels), image_channels_(image_channels) {
    if (depth < 1 || depth > kMaxDepth) {
      throw ConfigError("nested depth must be in [1, " + std::to_string(kMaxDepth) + "], got " +
                        std::to_string(depth));
    }
    for (int k = 1; k <= depth; ++k) {
      layers_.emplace_back(inn::INNStack<T>(spec_for(k, hidden_channels, blocks)));
    }
  }

  int depth() const { return static_cast<int>(layers_.size()); }
  int secret_channels() const { return secret_channels_; }
  int image_channels() const { return image_channels_; }

  inn::StackSpec spec_for(int k, int hidden_channels, int blocks) const {
    return {k == 1 ? image_channels_ : secret_channels_, secret_channels_, hidden_channels, blocks};
  }

  bool has_layer(int k) const { return k >= 1 && k <= depth() && layers_[k - 1].has_value(); }

  const inn::INNStack<T>& layer(int k) const {
    require_layer(k);
    if (observer_) observer_(k);
    return *layers_[k - 1];
  }
  inn::INNStack<T>& layer(int k) {
    require_layer(k);
    if (observer_) observer_(k);
    return *layers_[k - 1];
  }

  void set_layer(int k, inn::INNStack<T> stack) {
    if (k < 1 || k > depth()) throw InputError("layer index " + std::to_string(k) + " out of range");
    const int want_cover = k == 1 ? image_channels_ : secret_channels_;
    if (stack.cover_channels() != want_cover || stack.secret_channels() != secret_channels_) {
      throw InputError("layer " + std::to_string(k) + " channel layout mismatch");
    }
    layers_[k - 1] = std::move(stack);
  }

  void drop_layer(int k) {
    if (k >= 1 && k <= depth()) layers_[k - 1].reset();
  }

  void init_weights(std::uint64_t seed) {
    for (int k = 1; k <= depth(); ++k) {
      if (layers_[k - 1]) layers_[k - 1]->init_weights(seed * 1000003ULL + static_cast<std::uint64_t>(k));
    }
  }

  // Called with the layer index every time a layer's weights are read.
  void set_access_observer(std::function<void(int)> fn) { observer_ = std::move(fn); }

  friend bool operator==(const NestedStack& a, const NestedStack& b) {
    return a.secret_channels_ == b.secret_channels_ && a.image_channels_ == b.image_channels_ &&
           a.layers_ == b.layers_;
  }

 private:
  void require_layer(int k) const {
    if (k < 1 || k > depth()) {
      throw InputError("layer " + std::to_string(k) + " out of range for depth " + std::to_string(depth()));
    }
    if (!layers_[k - 1]) throw PermissionError("no weights for layer " + std::to_string(k));
  }

  int secret_channels_ = 0;
  int image_channels_ = 3;
  std::vector<std::optional<inn::INNStack<T>>> layers_;
  std::function<void(int)> observer_;
};

template <typename T>
struct NestedEmbedResult {
  Tensor<T> container;               // the image carrying everything
  std::vector<Tensor<T>> carriers;   // carriers[k-1] = container produced by layer k
  std::vector<Tensor<T>> latents;    // latents[k-1] = latent of layer k
};

// Cover of layer k: the image for k == 1, otherwise audio k - 1.
template <typename T>
const Tensor<T>& layer_cover(int k, const Tensor<T>& image, const std::vector<Tensor<T>>& audio) {
  return k == 1 ? image : audio[k - 2];
}

// audio[k-1] is the clip that surfaces at access level k. The deepest layer
// embeds audio N into audio N - 1; each shallower layer embeds the carrier
// of the layer below into its own cover.
template <typename T>
NestedEmbedResult<T> nested_encode(const NestedStack<T>& stack, const Tensor<T>& image,
                                   const std::vector<Tensor<T>>& audio,
                                   std::vector<inn::StackForwardTape<T>>* tapes = nullptr) {
  const int n = stack.depth();
  if (static_cast<int>(audio.size()) != n) {
    throw InputError("nested_encode: depth " + std::to_string(n) + " needs " + std::to_string(n) +
                     " audio tensors, got " + std::to_string(audio.size()));
  }
  for (const auto& a : audio) {
    if (a.channels() != stack.secret_channels()) {
      throw InputError("nested_encode: audio tensor has " + std::to_string(a.channels()) +
                       " channels, stack expects " + std::to_string(stack.secret_channels()));
    }
  }
  NestedEmbedResult<T> r;
  r.carriers.resize(n);
  r.latents.resize(n);
  if (tapes != nullptr) tapes->assign(n, {});
  for (int k = n; k >= 1; --k) {
    const Tensor<T>& secret = k == n ? audio[n - 1] : r.carriers[k];
    auto e = stack.layer(k).forward_embed(layer_cover(k, image, audio), secret,
                                          tapes ? &(*tapes)[k - 1] : nullptr);
    r.carriers[k - 1] = std::move(e.container);
    r.latents[k - 1] = std::move(e.latent);
  }
  r.container = r.carriers[0];
  return r;
}

// Deployed decode to access level `level`: layer 1 reveals from the container,
// layer k >= 2 reveals from the secret estimate of layer k - 1. Entry k - 1 is
// (secret estimate, cover estimate) of layer k. Layers beyond `level` are
// never read.
template <typename T>
std::vector<inn::RevealResult<T>> nested_decode(const NestedStack<T>& stack, const Tensor<T>& container,
                                                int level,
                                                std::vector<inn::StackInverseTape<T>>* tapes = nullptr) {
  if (level < 1 || level > stack.depth()) {
    throw InputError("access level " + std::to_string(level) + " outside [1, " +
                     std::to_string(stack.depth()) + "]");
  }
  for (int k = 1; k <= level; ++k) {
    if (!stack.has_layer(k)) {
      throw PermissionError("access level " + std::to_string(level) + " needs weights for layer " +
                            std::to_string(k));
    }
  }
  std::vector<inn::RevealResult<T>> out;
  if (tapes != nullptr) tapes->assign(level, {});
  const Tensor<T>* input = &container;
  for (int k = 1; k <= level; ++k) {
    out.push_back(stack.layer(k).reveal_deployed(*input, tapes ? &(*tapes)[k - 1] : nullptr));
    input = &out.back().secret;
  }
  return out;
}

template <typename T>
struct NestedExactDecode {
  Tensor<T> image;
  std::vector<Tensor<T>> audio;
};

// Inverse of nested_encode given every layer's true latent.
template <typename T>
NestedExactDecode<T> nested_decode_exact(const NestedStack<T>& stack, const Tensor<T>& container,
                                         const std::vector<Tensor<T>>& latents) {
  const int n = stack.depth();
  if (static_cast<int>(latents.size()) != n) throw InputError("nested_decode_exact: latent count mismatch");
  NestedExactDecode<T> out;
  out.audio.resize(n);
  Tensor<T> carrier = container;
  for (int k = 1; k <= n; ++k) {
    auto r = stack.layer(k).backward_reveal(carrier, latents[k - 1]);
    if (k == 1) {
      out.image = std::move(r.cover);
    } else {
      out.audio[k - 2] = std::move(r.cover);
    }
    carrier = std::move(r.secret);
  }
  out.audio[n - 1] = std::move(carrier);
  return out;
}

}  // namespace imgvox::nested
