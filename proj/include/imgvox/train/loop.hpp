// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "imgvox/audio/mel.hpp"
#include "imgvox/data/corpus.hpp"
#include "imgvox/data/image_io.hpp"
#include "imgvox/nested/nested.hpp"
#include "imgvox/packer/codec.hpp"
#include "imgvox/train/checkpoint.hpp"
#include "imgvox/train/config.hpp"
#include "imgvox/train/trainer.hpp"

namespace imgvox::train {

// In-memory training material. Pair i uses image i and, at access level k,
// clip (i + k - 1) mod clips.
struct TrainingData {
  std::vector<Tensor<float>> images;
  std::vector<audio::Waveform> clips;
};

struct TrainingResult {
  nested::NestedStack<float> stack;
  CheckpointMeta meta;
  std::vector<StepReport> steps;
};

inline TrainingData load_training_data(const data::CorpusIndex& idx, data::Split split) {
  TrainingData d;
  for (const auto& p : idx.images(split)) d.images.push_back(data::read_image(p).pixels);
  for (const auto& e : idx.audio(split)) d.clips.push_back(audio::read_wav(e.path));
  return d;
}

// Largest mel magnitude over all clips; becomes the 0 dB reference.
inline double corpus_mel_reference(const std::vector<audio::Waveform>& clips) {
  double ref = 0.0;
  for (const auto& c : clips) ref = std::max(ref, audio::peak_mel_magnitude(c));
  return ref > 0.0 ? ref : audio::default_mel_reference();
}

inline data::PairOptions pair_options(const TrainConfig& cfg, const CheckpointMeta& meta) {
  data::PairOptions po;
  po.min_s = cfg.duration_min_s;
  po.max_s = cfg.duration_max_s;
  po.image_size = cfg.image_size;
  po.pack = {cfg.format, cfg.geometry(), meta.mel_reference, meta.stft_scale, meta.secret_channels};
  return po;
}

// Training sample for pair `item` in `epoch`; durations are drawn from
// (seed, epoch, item) so the sequence is fixed by the configuration.
inline NestedSample<float> make_sample(const TrainingData& data, const std::vector<Tensor<float>>& images,
                                      std::size_t item, std::uint64_t epoch, int depth,
                                      const TrainConfig& cfg, const data::PairOptions& po) {
  auto rng = data::pair_rng(cfg.seed, epoch, item);
  NestedSample<float> s;
  s.image = images[item];
  for (int k = 0; k < depth; ++k) {
    const double d = data::draw_duration(rng, po.min_s, po.max_s);
    const auto& clip = data.clips[(item + static_cast<std::size_t>(k)) % data.clips.size()];
    const auto wave = audio::fit_length(clip, audio::samples_for_duration(d));
    s.audio.push_back(packer::pack_audio(wave, po.pack).tensor.cast<float>());
  }
  return s;
}

inline TrainingResult run_training(const TrainConfig& cfg, const TrainingData& data,
                                   const std::function<void(int epoch, const StepReport&)>& on_step = {}) {
  cfg.validate();
  if (data.images.empty() || data.clips.empty()) throw InputError("training needs at least one image and one clip");
  TrainingResult r;
  r.meta.config = cfg;
  r.meta.mel_reference = corpus_mel_reference(data.clips);
  r.meta.stft_scale = packer::stft_full_scale();
  r.meta.secret_channels = cfg.secret_channels();
  r.meta.depth = cfg.nested_depth;
  r.stack = nested::NestedStack<float>(cfg.nested_depth, r.meta.secret_channels, 3, cfg.hidden_channels, cfg.blocks);
  r.stack.init_weights(cfg.seed);
  for (int k = 1; k <= cfg.nested_depth; ++k) r.meta.layers.push_back(k);

  std::vector<Tensor<float>> images;
  for (const auto& im : data.images) images.push_back(data::resize_bilinear(im, cfg.image_size, cfg.image_size));
  const auto po = pair_options(cfg, r.meta);
  Adam adam(cfg.adam());
  const StepOptions opt{cfg.weights(), cfg.quantize_container};
  const std::size_t n = images.size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = data::pair_rng(cfg.seed, static_cast<std::uint64_t>(epoch), ~0ULL);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += batch) {
      if (cfg.max_steps > 0 && adam.steps() >= cfg.max_steps) break;
      std::vector<NestedSample<float>> samples;
      for (std::size_t j = start; j < std::min(n, start + batch); ++j) {
        samples.push_back(make_sample(data, images, order[j], static_cast<std::uint64_t>(epoch), cfg.nested_depth,
                                      cfg, po));
      }
      auto report = train_nested(r.stack, adam, samples, opt);
      if (on_step) on_step(epoch, report);
      r.steps.push_back(std::move(report));
    }
    if (cfg.max_steps > 0 && adam.steps() >= cfg.max_steps) break;
  }
  r.meta.steps = adam.steps();
  return r;
}

// CSV of the per-step losses: epoch,step,total,layer{k}_total...
inline std::string loss_log_header(int depth) {
  std::string h = "epoch,step,total";
  for (int k = 1; k <= depth; ++k) h += ",layer" + std::to_string(k) + "_total";
  return h;
}

inline std::string loss_log_line(int epoch, const StepReport& r) {
  std::ostringstream out;
  out.precision(9);
  out << epoch << "," << r.step << "," << r.total;
  for (const auto& l : r.layers) out << "," << l.total;
  return out.str();
}

}  // namespace imgvox::train
