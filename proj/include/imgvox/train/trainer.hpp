// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"
#include "imgvox/inn/stack.hpp"
#include "imgvox/nested/nested.hpp"
#include "imgvox/train/adam.hpp"
#include "imgvox/train/loss.hpp"

namespace imgvox::train {

template <typename T>
struct TrainSample {
  Tensor<T> cover;
  Tensor<T> secret;
};

// audio[k-1] is the clip recovered at access level k.
template <typename T>
struct NestedSample {
  Tensor<T> image;
  std::vector<Tensor<T>> audio;
};

struct StepOptions {
  LossWeights weights{};
  bool quantize_container = false;  // round the container to 8 bits before reveal
};

struct StepReport {
  long long step = 0;
  std::vector<LossReport> layers;  // batch means, one per layer
  double total = 0.0;              // sum of layer totals
};

// Round-to-nearest 8-bit pixel value of the clamped tensor, matching the
// PNG export.
template <typename T>
Tensor<T> quantize8(const Tensor<T>& x) {
  Tensor<T> q(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::clamp(static_cast<double>(x[i]), 0.0, 1.0);
    q[i] = static_cast<T>(static_cast<double>(std::lround(v * 255.0)) / 255.0);
  }
  return q;
}

namespace detail {

inline void check_finite(const LossReport& r, int layer, std::size_t sample) {
  if (std::isfinite(r.total) && std::isfinite(r.container) && std::isfinite(r.cover) &&
      std::isfinite(r.secret)) {
    return;
  }
  std::ostringstream msg;
  msg << "non-finite loss at layer " << layer << ", sample " << sample << " (container " << r.container
      << ", cover " << r.cover << ", secret " << r.secret << ")";
  throw TrainingError(msg.str());
}

// Forward, deployed reveal and backward for one sample through a cascade of
// `layers` (layer 1 first). Gradients of `scale` times the summed layer
// losses are added to `grads`. Returns the unscaled per-layer losses.
template <typename T>
std::vector<LossReport> accumulate_sample(const std::vector<const inn::INNStack<T>*>& layers,
                                          const Tensor<T>& image, const std::vector<Tensor<T>>& audio,
                                          const StepOptions& opt, double scale,
                                          std::vector<inn::INNStack<T>>& grads, std::size_t sample_index) {
  const int n = static_cast<int>(layers.size());
  const LossWeights& w = opt.weights;
  auto cover_of = [&](int k) -> const Tensor<T>& { return k == 1 ? image : audio[k - 2]; };

  std::vector<Tensor<T>> carriers(n);
  std::vector<inn::StackForwardTape<T>> ftapes(n);
  for (int k = n; k >= 1; --k) {
    const Tensor<T>& secret = k == n ? audio[n - 1] : carriers[k];
    carriers[k - 1] = layers[k - 1]->forward_embed(cover_of(k), secret, &ftapes[k - 1]).container;
  }
  auto target_of = [&](int k) -> const Tensor<T>& { return k == n ? audio[n - 1] : carriers[k]; };

  std::vector<inn::RevealResult<T>> revealed;
  std::vector<inn::StackInverseTape<T>> rtapes(n);
  {
    Tensor<T> shipped = opt.quantize_container ? quantize8(carriers[0]) : carriers[0];
    for (int k = 1; k <= n; ++k) {
      const Tensor<T>& input = k == 1 ? shipped : revealed.back().secret;
      revealed.push_back(layers[k - 1]->reveal_deployed(input, &rtapes[k - 1]));
    }
  }

  std::vector<LossReport> reports(n);
  for (int k = 1; k <= n; ++k) {
    reports[k - 1] = loss_total(carriers[k - 1], cover_of(k), revealed[k - 1].cover,
                                revealed[k - 1].secret, target_of(k), w);
    check_finite(reports[k - 1], k, sample_index);
  }

  // Gradient w.r.t. each carrier from its own container term.
  std::vector<Tensor<T>> d_carrier(n);
  for (int k = 1; k <= n; ++k) d_carrier[k - 1] = mse_grad(carriers[k - 1], cover_of(k), w.container * scale);

  // Reveal chain, deepest layer first.
  Tensor<T> d_from_deeper;
  for (int k = n; k >= 1; --k) {
    const auto& r = revealed[k - 1];
    Tensor<T> d_secret = mse_grad(r.secret, target_of(k), w.secret * scale);
    if (k < n) {
      d_carrier[k] -= d_secret;  // the target is itself a carrier
      d_secret += d_from_deeper;
    }
    Tensor<T> d_cover = mse_grad(r.cover, cover_of(k), w.cover * scale);
    auto g = layers[k - 1]->backward_through_reveal(rtapes[k - 1], std::move(d_secret), std::move(d_cover),
                                                    grads[k - 1]);
    d_from_deeper = std::move(g.cover);
  }
  // Straight through the optional quantizer.
  d_carrier[0] += d_from_deeper;

  // Embed chain, shallowest layer first.
  for (int k = 1; k <= n; ++k) {
    Tensor<T> d_latent(layers[k - 1]->secret_channels(), image.height(), image.width());
    auto g = layers[k - 1]->backward_through_embed(ftapes[k - 1], std::move(d_carrier[k - 1]),
                                                   std::move(d_latent), grads[k - 1]);
    if (k < n) d_carrier[k] += g.secret;
  }
  return reports;
}

template <typename T>
void apply_adam(Adam& adam, std::vector<inn::INNStack<T>*>& layers, const std::vector<inn::INNStack<T>>& grads) {
  adam.begin_step();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<std::span<const T>> g;
    grads[k].for_each_parameter([&g](const std::string&, std::span<const T> v) { g.push_back(v); });
    std::size_t i = 0;
    const std::string prefix = "layer" + std::to_string(k + 1) + "/";
    layers[k]->for_each_parameter(
        [&](const std::string& name, std::span<T> p) { adam.update<T>(prefix + name, p, g[i++]); });
  }
}

template <typename T>
StepReport run_step(std::vector<inn::INNStack<T>*> layers, Adam& adam,
                    const std::vector<NestedSample<T>>& batch, const StepOptions& opt, bool update) {
  if (batch.empty()) throw InputError("training batch is empty");
  opt.weights.validate();
  std::vector<const inn::INNStack<T>*> view(layers.begin(), layers.end());
  std::vector<inn::INNStack<T>> total_grads;
  for (auto* l : layers) total_grads.push_back(l->zeros_like());
  const double scale = 1.0 / static_cast<double>(batch.size());

  StepReport report;
  report.layers.assign(layers.size(), {});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    if (s.audio.size() != layers.size()) throw InputError("sample audio count does not match depth");
    // Per-sample gradients are summed in sample order, so the result does
    // not depend on how samples are scheduled.
    std::vector<inn::INNStack<T>> grads;
    for (auto* l : layers) grads.push_back(l->zeros_like());
    const auto losses = accumulate_sample(view, s.image, s.audio, opt, scale, grads, b);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      report.layers[k] += losses[k].scaled(scale);
      std::vector<std::span<const T>> g;
      grads[k].for_each_parameter([&g](const std::string&, std::span<const T> v) { g.push_back(v); });
      std::size_t i = 0;
      total_grads[k].for_each_parameter([&](const std::string&, std::span<T> acc) {
        const auto src = g[i++];
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += src[j];
      });
    }
  }
  for (const auto& l : report.layers) report.total += l.total;
  if (update) apply_adam(adam, layers, total_grads);
  report.step = adam.steps();
  return report;
}

}  // namespace detail

// One optimizer step of a single embedding stack on a batch.
template <typename T>
StepReport train_step(inn::INNStack<T>& stack, Adam& adam, const std::vector<TrainSample<T>>& batch,
                      const StepOptions& opt = {}) {
  std::vector<NestedSample<T>> nested;
  nested.reserve(batch.size());
  for (const auto& s : batch) nested.push_back({s.cover, {s.secret}});
  return detail::run_step<T>({&stack}, adam, nested, opt, true);
}

// Joint step over every layer of a nested stack; the objective is the sum of
// the per-layer losses.
template <typename T>
StepReport train_nested(nested::NestedStack<T>& stack, Adam& adam, const std::vector<NestedSample<T>>& batch,
                        const StepOptions& opt = {}) {
  std::vector<inn::INNStack<T>*> layers;
  for (int k = 1; k <= stack.depth(); ++k) layers.push_back(&stack.layer(k));
  return detail::run_step<T>(layers, adam, batch, opt, true);
}

// Losses without an update.
template <typename T>
StepReport evaluate_nested(nested::NestedStack<T>& stack, const std::vector<NestedSample<T>>& batch,
                           const StepOptions& opt = {}) {
  std::vector<inn::INNStack<T>*> layers;
  for (int k = 1; k <= stack.depth(); ++k) layers.push_back(&stack.layer(k));
  Adam unused;
  return detail::run_step<T>(layers, unused, batch, opt, false);
}

}  // namespace imgvox::train
