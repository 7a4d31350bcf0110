// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "imgvox/data/synthetic.hpp"
#include "imgvox/nested/nested.hpp"
#include "imgvox/packer/codec.hpp"
#include "imgvox/train/adam.hpp"
#include "imgvox/train/config.hpp"
#include "imgvox/train/loop.hpp"
#include "imgvox/train/loss.hpp"
#include "imgvox/train/trainer.hpp"

namespace imgvox::train {
namespace {

template <typename T>
Tensor<T> uniform(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(u(rng));
  return t;
}

template <typename T>
void randomize(inn::INNStack<T>& s, std::uint64_t seed, double std) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std);
  s.for_each_parameter([&](const std::string&, std::span<T> v) {
    for (auto& x : v) x = static_cast<T>(n(rng));
  });
}

// --- loss ---

TEST(Loss, IdenticalPairsGiveZero) {
  const auto a = uniform<float>(3, 8, 8, 1);
  const auto s = uniform<float>(2, 8, 8, 2);
  const auto r = loss_total(a, a, a, s, s);
  EXPECT_EQ(r.total, 0.0);
  EXPECT_EQ(r.container, 0.0);
}

TEST(Loss, ConstantContainerOffset) {
  const auto cover = uniform<double>(3, 8, 8, 1, 0.0, 0.5);
  Tensor<double> container = cover;
  for (std::size_t i = 0; i < container.size(); ++i) container[i] += 0.1;
  const auto s = uniform<double>(2, 8, 8, 2);
  const auto r = loss_total(container, cover, cover, s, s);
  EXPECT_NEAR(r.container, 0.01, 1e-12);
  EXPECT_NEAR(r.total, 0.32, 1e-12);
}

TEST(Loss, DefaultWeights) {
  const LossWeights w;
  EXPECT_EQ(w.container, 32.0);
  EXPECT_EQ(w.cover, 1.0);
  EXPECT_EQ(w.secret, 32.0);
}

TEST(Loss, TotalIsConfiguredLinearCombination) {
  const LossWeights w{2.0, 3.0, 5.0};
  const auto a = uniform<double>(3, 6, 6, 1), b = uniform<double>(3, 6, 6, 2), c = uniform<double>(3, 6, 6, 3);
  const auto s = uniform<double>(2, 6, 6, 4), t = uniform<double>(2, 6, 6, 5);
  const auto r = loss_total(a, b, c, s, t, w);
  EXPECT_GE(r.container, 0.0);
  EXPECT_GE(r.cover, 0.0);
  EXPECT_GE(r.secret, 0.0);
  EXPECT_EQ(r.total, 2.0 * r.container + 3.0 * r.cover + 5.0 * r.secret);
}

TEST(Loss, ShapeMismatchIsInputError) {
  EXPECT_THROW(mse(uniform<float>(3, 4, 4, 1), uniform<float>(3, 4, 5, 1)), InputError);
}

TEST(Loss, NegativeWeightRejected) {
  EXPECT_THROW((LossWeights{-1.0, 1.0, 1.0}.validate()), Error);
}

TEST(Loss, MseGradMatchesFiniteDifference) {
  auto a = uniform<double>(1, 3, 3, 1);
  const auto b = uniform<double>(1, 3, 3, 2);
  const auto g = mse_grad(a, b, 7.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double keep = a[i];
    a[i] = keep + 1e-6;
    const double up = 7.0 * mse(a, b);
    a[i] = keep - 1e-6;
    const double dn = 7.0 * mse(a, b);
    a[i] = keep;
    EXPECT_NEAR(g[i], (up - dn) / 2e-6, 1e-7);
  }
}

// --- adam ---

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first step is lr * g / (|g| + eps) = lr * sign(g).
  Adam adam(AdamConfig{0.1});
  std::vector<double> p = {1.0, -2.0, 3.0};
  const std::vector<double> g = {0.5, -4.0, 0.0};
  adam.begin_step();
  adam.update<double>("p", p, g);
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -1.9, 1e-6);
  EXPECT_EQ(p[2], 3.0);
}

TEST(Adam, MatchesReferenceRecurrence) {
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  Adam adam(cfg);
  std::vector<double> p = {0.3};
  double m = 0.0, v = 0.0, ref = 0.3;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2.0 * ref;  // d/dp of p^2, evaluated on the reference path
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    const std::vector<double> grad = {2.0 * p[0]};
    adam.begin_step();
    adam.update<double>("p", p, grad);
    EXPECT_NEAR(p[0], ref, 1e-15);
  }
  EXPECT_EQ(adam.steps(), 5);
}

TEST(Adam, UpdateBeforeBeginStepIsError) {
  Adam adam;
  std::vector<float> p = {1.0f};
  const std::vector<float> g = {1.0f};
  EXPECT_THROW(adam.update<float>("p", p, g), TrainingError);
}

// --- trainer gradients ---

// Full loss (all layers) for a nested stack; used as the finite-difference oracle.
template <typename T>
double objective(nested::NestedStack<T>& s, const NestedSample<T>& sample, const StepOptions& opt) {
  return evaluate_nested(s, {sample}, opt).total;
}

void check_nested_gradient(int depth) {
  nested::NestedStack<double> stack(depth, 2, 3, 4, 2);
  for (int k = 1; k <= depth; ++k) randomize(stack.layer(k), 100 + k, 0.2);
  NestedSample<double> sample{uniform<double>(3, 4, 4, 1), {}};
  for (int k = 0; k < depth; ++k) sample.audio.push_back(uniform<double>(2, 4, 4, 10 + k));
  const StepOptions opt;

  std::vector<const inn::INNStack<double>*> view;
  std::vector<inn::INNStack<double>> grads;
  for (int k = 1; k <= depth; ++k) {
    view.push_back(&stack.layer(k));
    grads.push_back(stack.layer(k).zeros_like());
  }
  detail::accumulate_sample(view, sample.image, sample.audio, opt, 1.0, grads, 0);

  double worst = 0.0;
  std::size_t checked = 0;
  for (int k = 1; k <= depth; ++k) {
    std::vector<std::span<double>> params, g;
    stack.layer(k).for_each_parameter([&](const std::string&, std::span<double> v) { params.push_back(v); });
    grads[k - 1].for_each_parameter([&](const std::string&, std::span<double> v) { g.push_back(v); });
    for (std::size_t p = 0; p < params.size(); ++p) {
      // Every 7th entry keeps the test quick while touching every tensor.
      for (std::size_t i = p % 7; i < params[p].size(); i += 7) {
        const double keep = params[p][i];
        params[p][i] = keep + 1e-6;
        const double up = objective(stack, sample, opt);
        params[p][i] = keep - 1e-6;
        const double dn = objective(stack, sample, opt);
        params[p][i] = keep;
        const double fd = (up - dn) / 2e-6;
        const double denom = std::max({std::abs(fd), std::abs(g[p][i]), 1e-6});
        worst = std::max(worst, std::abs(fd - g[p][i]) / denom);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100u);
  EXPECT_LT(worst, 1e-4) << "depth " << depth;
}

TEST(Trainer, SingleLayerGradientMatchesFiniteDifference) { check_nested_gradient(1); }
TEST(Trainer, TwoLayerGradientMatchesFiniteDifference) { check_nested_gradient(2); }

TEST(Trainer, ZeroInitFirstStepLosses) {
  inn::INNStack<float> stack(inn::StackSpec{3, 2, 8, 8});
  stack.init_weights(3);
  const auto cover = uniform<float>(3, 8, 8, 1);
  const auto secret = uniform<float>(2, 8, 8, 2);
  Adam adam;
  const auto r = train_step(stack, adam, {{cover, secret}});
  EXPECT_EQ(r.layers[0].container, 0.0);
  EXPECT_EQ(r.layers[0].cover, 0.0);
  double ms = 0.0;
  for (std::size_t i = 0; i < secret.size(); ++i) ms += static_cast<double>(secret[i]) * secret[i];
  EXPECT_NEAR(r.layers[0].secret, ms / static_cast<double>(secret.size()), 1e-7);
  EXPECT_EQ(r.step, 1);
}

TEST(Trainer, NestedZeroInitAndSum) {
  nested::NestedStack<float> stack(2, 2, 3, 8, 2);
  stack.init_weights(4);
  NestedSample<float> s{uniform<float>(3, 8, 8, 1), {uniform<float>(2, 8, 8, 2), uniform<float>(2, 8, 8, 3)}};
  const auto r = evaluate_nested(stack, {s});
  ASSERT_EQ(r.layers.size(), 2u);
  EXPECT_EQ(r.layers[0].container, 0.0);
  EXPECT_EQ(r.layers[0].cover, 0.0);
  EXPECT_EQ(r.layers[1].container, 0.0);
  // Layer 2 reveals from layer 1's revealed secret, which is silence here.
  EXPECT_GT(r.layers[1].cover, 0.0);
  EXPECT_EQ(r.total, r.layers[0].total + r.layers[1].total);
}

TEST(Trainer, SameSeedSameTrajectory) {
  auto run = [] {
    inn::INNStack<float> stack(inn::StackSpec{3, 2, 8, 2});
    stack.init_weights(5);
    Adam adam(AdamConfig{1e-3});
    std::vector<TrainSample<float>> batch = {{uniform<float>(3, 8, 8, 1), uniform<float>(2, 8, 8, 2)},
                                             {uniform<float>(3, 8, 8, 3), uniform<float>(2, 8, 8, 4)}};
    std::vector<double> losses;
    for (int i = 0; i < 5; ++i) losses.push_back(train_step(stack, adam, batch).total);
    return std::make_pair(losses, stack);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_TRUE(a.second == b.second);
}

TEST(Trainer, StepKeepsExactInvertibility) {
  inn::INNStack<double> stack(inn::StackSpec{3, 2, 8, 4});
  stack.init_weights(6);
  Adam adam(AdamConfig{1e-2});
  const auto cover = uniform<double>(3, 8, 8, 1);
  const auto secret = uniform<double>(2, 8, 8, 2);
  train_step(stack, adam, {{cover, secret}});
  const auto e = stack.forward_embed(cover, secret);
  const auto r = stack.backward_reveal(e.container, e.latent);
  EXPECT_LT(max_abs_diff(r.cover, cover), 1e-12);
  EXPECT_LT(max_abs_diff(r.secret, secret), 1e-12);
}

TEST(Trainer, NonFiniteLossIsTrainingError) {
  inn::INNStack<float> stack(inn::StackSpec{3, 2, 8, 2});
  stack.init_weights(7);
  auto cover = uniform<float>(3, 8, 8, 1);
  cover[0] = std::numeric_limits<float>::infinity();
  Adam adam;
  try {
    train_step(stack, adam, {{cover, uniform<float>(2, 8, 8, 2)}});
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
}

TEST(Trainer, QuantizeMatchesPngRounding) {
  Tensor<float> t(1, 1, 4);
  t[0] = -0.2f;
  t[1] = 0.5f;
  t[2] = 1.3f;
  t[3] = 0.25f;
  const auto q = quantize8(t);
  EXPECT_EQ(q[0], 0.0f);
  EXPECT_EQ(q[1], static_cast<float>(128.0 / 255.0));
  EXPECT_EQ(q[2], 1.0f);
  EXPECT_EQ(q[3], static_cast<float>(64.0 / 255.0));
}

TEST(Trainer, QuantizedStepRunsAndLearns) {
  inn::INNStack<float> stack(inn::StackSpec{3, 2, 8, 2});
  stack.init_weights(8);
  Adam adam(AdamConfig{1e-2});
  const StepOptions opt{{}, true};
  std::vector<TrainSample<float>> batch = {{uniform<float>(3, 8, 8, 1), uniform<float>(2, 8, 8, 2)}};
  const double first = train_step(stack, adam, batch, opt).total;
  double last = first;
  for (int i = 0; i < 30; ++i) last = train_step(stack, adam, batch, opt).total;
  EXPECT_LT(last, first);
}

// 16-sample toy set, 100 steps: training must make progress on its objective.
TEST(Trainer, ToySetLossFalls) {
  const int size = 16;
  const packer::PackOptions po{packer::SecretFormat::mel, {size, size}, 0.0, 0.0, 0};
  std::vector<TrainSample<float>> set;
  for (int i = 0; i < 16; ++i) {
    auto p = packer::pack_audio(data::synthetic::speech_like(0.2, 40 + i), po);
    set.push_back({data::synthetic::face_like(size, i), p.tensor.cast<float>()});
  }
  inn::INNStack<float> stack(inn::StackSpec{3, set[0].secret.channels(), 32, 8});
  stack.init_weights(9);
  Adam adam;
  std::vector<double> losses;
  for (int step = 0; step < 100; ++step) {
    std::vector<TrainSample<float>> batch(set.begin() + (step % 2) * 8, set.begin() + (step % 2) * 8 + 8);
    losses.push_back(train_step(stack, adam, batch).total);
  }
  EXPECT_LT(losses.back(), 0.5 * losses.front());
}

// --- config ---

constexpr const char* kMinimal =
    "epochs = 3\nlearning_rate = 2e-4\nbatch_size = 4\nseed = 9\nimage_size = 64\n"
    "duration_range_s = 0-2\nformat = mel\n";

TEST(Config, ParsesMinimalDocument) {
  const auto c = parse_config(kMinimal, "test", false);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.learning_rate, 2e-4);
  EXPECT_EQ(c.batch_size, 4);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.image_size, 64);
  EXPECT_EQ(c.duration_min_s, 0.0);
  EXPECT_EQ(c.duration_max_s, 2.0);
  EXPECT_EQ(c.format, packer::SecretFormat::mel);
  EXPECT_FALSE(c.quantize_container);
  EXPECT_EQ(c.adam_beta1, 0.9);
  EXPECT_EQ(c.adam_beta2, 0.999);
  EXPECT_EQ(c.adam_eps, 1e-8);
}

TEST(Config, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 100);
  EXPECT_EQ(c.learning_rate, 2e-4);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_FALSE(c.quantize_container);
}

TEST(Config, MissingKeyNamesKey) {
  try {
    parse_config("epochs = 3\nlearning_rate = 1\nbatch_size = 4\nseed = 9\nimage_size = 64\nformat = mel\n", "t",
                 false);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("duration_range_s"), std::string::npos);
  }
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config(std::string(kMinimal) + "colour = blue\n", "t", false), ConfigError);
}

TEST(Config, RepeatedKeyRejected) {
  EXPECT_THROW(parse_config(std::string(kMinimal) + "epochs = 4\n", "t", false), ConfigError);
}

TEST(Config, InvariantsEnforced) {
  std::string bad = kMinimal;
  bad.replace(bad.find("epochs = 3"), 10, "epochs = 0");
  EXPECT_THROW(parse_config(bad, "t", false), ConfigError);
  std::string neg = kMinimal;
  neg.replace(neg.find("0-2"), 3, "3-2");
  EXPECT_THROW(parse_config(neg, "t", false), ConfigError);
}

TEST(Config, CommentsAndRangeForms) {
  auto c = parse_config(std::string("# header\n") + kMinimal, "t", false);
  EXPECT_EQ(c.duration_max_s, 2.0);
  std::string single = kMinimal;
  single.replace(single.find("0-2"), 3, "10");
  c = parse_config(single, "t", false);
  EXPECT_EQ(c.duration_min_s, 0.0);
  EXPECT_EQ(c.duration_max_s, 10.0);
}

TEST(Config, EnvironmentOverrides) {
  ::setenv("IMGVOX_BATCH_SIZE", "2", 1);
  const auto c = parse_config(kMinimal, "t", true);
  ::unsetenv("IMGVOX_BATCH_SIZE");
  EXPECT_EQ(c.batch_size, 2);
}

TEST(Config, JsonRoundTrip) {
  auto c = parse_config(kMinimal, "t", false);
  c.nested_depth = 2;
  c.quantize_container = true;
  EXPECT_TRUE(config_from_json(to_json(c)) == c);
}

TEST(Config, SecretChannelsFollowRange) {
  auto c = parse_config(kMinimal, "t", false);
  EXPECT_EQ(c.secret_channels(), packer::channels_for(2.0, packer::SecretFormat::mel, {64, 64}));
}

// --- loop ---

TEST(Loop, LossLogFormat) {
  StepReport r;
  r.step = 3;
  r.layers = {{0, 0, 0, 0.5}, {0, 0, 0, 0.25}};
  r.total = 0.75;
  EXPECT_EQ(loss_log_header(2), "epoch,step,total,layer1_total,layer2_total");
  EXPECT_EQ(loss_log_line(1, r), "1,3,0.75,0.5,0.25");
}

TEST(Loop, MaxStepsAndDeterminism) {
  TrainConfig cfg = parse_config(kMinimal, "t", false);
  cfg.image_size = 16;
  cfg.hidden_channels = 4;
  cfg.blocks = 2;
  cfg.batch_size = 2;
  cfg.max_steps = 3;
  cfg.duration_max_s = 0.5;
  TrainingData data;
  for (int i = 0; i < 4; ++i) {
    data.images.push_back(data::synthetic::face_like(20, i));
    data.clips.push_back(data::synthetic::speech_like(0.5, i));
  }
  const auto a = run_training(cfg, data);
  const auto b = run_training(cfg, data);
  EXPECT_EQ(a.steps.size(), 3u);
  EXPECT_EQ(a.meta.steps, 3);
  EXPECT_TRUE(a.stack == b.stack);
  for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].total, b.steps[i].total);
}

}  // namespace
}  // namespace imgvox::train
