// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "imgvox/inn/coupling.hpp"
#include "imgvox/inn/es_gate.hpp"
#include "imgvox/inn/stack.hpp"
#include "imgvox/nn/conv.hpp"
#include "imgvox/nn/subnet.hpp"

namespace imgvox::inn {
namespace {

template <typename T>
Tensor<T> uniform(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor<T> t(c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(u(rng));
  return t;
}

template <typename T, typename Obj>
void randomize(Obj& o, std::uint64_t seed, double std) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std);
  o.for_each_parameter([&](const std::string&, std::span<T> v) {
    for (auto& x : v) x = static_cast<T>(n(rng));
  });
}

// Direct zero-padded 3x3 cross-correlation.
Tensor<double> naive_conv(const nn::Conv3x3<double>& c, const Tensor<double>& x) {
  Tensor<double> y(c.out_channels, x.height(), x.width());
  for (int o = 0; o < c.out_channels; ++o) {
    for (int r = 0; r < x.height(); ++r) {
      for (int q = 0; q < x.width(); ++q) {
        double acc = c.bias[o];
        for (int i = 0; i < c.in_channels; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int rr = r + ky - 1, qq = q + kx - 1;
              if (rr < 0 || qq < 0 || rr >= x.height() || qq >= x.width()) continue;
              acc += c.weight[((o * c.in_channels + i) * 3 + ky) * 3 + kx] * x(i, rr, qq);
            }
          }
        }
        y(o, r, q) = acc;
      }
    }
  }
  return y;
}

Tensor<double> naive_subnet(const nn::Subnet<double>& s, const Tensor<double>& x) {
  auto h = naive_conv(s.hidden_conv(), x);
  for (auto& v : h.values()) v = v > 0 ? v : 0.2 * v;
  return naive_conv(s.output_conv(), h);
}

// --- es gate ---

TEST(EsGate, ValuesAndLimits) {
  EXPECT_DOUBLE_EQ(es_gate(0.0), std::exp(0.5));
  EXPECT_NEAR(es_gate(50.0), std::exp(1.0), 1e-12);
  EXPECT_NEAR(es_gate(-50.0), 1.0, 1e-12);
  for (double x = -10; x <= 10; x += 0.5) {
    EXPECT_GE(es_gate(x), 1.0);
    EXPECT_LE(es_gate(x), std::exp(1.0));
  }
  EXPECT_TRUE(std::isfinite(es_gate(-1000.0)));
  EXPECT_TRUE(std::isfinite(es_gate(1000.0f)));
}

TEST(EsGate, DerivativeMatchesFiniteDifference) {
  for (double x : {-3.0, -0.4, 0.0, 0.7, 2.5}) {
    const double fd = (es_gate(x + 1e-6) - es_gate(x - 1e-6)) / 2e-6;
    EXPECT_NEAR(es_gate_derivative(x), fd, 1e-8);
  }
}

// --- conv and subnet ---

TEST(Conv, MatchesDirectLoops) {
  nn::Conv3x3<double> c(3, 5);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.5);
  for (auto& w : c.weight) w = n(rng);
  for (auto& b : c.bias) b = n(rng);
  const auto x = uniform<double>(3, 6, 7, 2);
  EXPECT_LT(max_abs_diff(c.forward(x), naive_conv(c, x)), 1e-12);
}

TEST(Conv, BackwardMatchesFiniteDifference) {
  nn::Conv3x3<double> c(2, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.5);
  for (auto& w : c.weight) w = n(rng);
  for (auto& b : c.bias) b = n(rng);
  auto x = uniform<double>(2, 4, 5, 4);
  const auto wt = uniform<double>(3, 4, 5, 5);
  auto objective = [&] {
    const auto y = c.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += wt[i] * y[i];
    return s;
  };
  nn::Conv3x3<double> g(2, 3);
  const auto dx = c.backward(x, wt, g);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + 1e-6;
    const double up = objective();
    x[i] = keep - 1e-6;
    const double dn = objective();
    x[i] = keep;
    EXPECT_NEAR(dx[i], (up - dn) / 2e-6, 1e-6);
  }
  for (std::size_t i = 0; i < c.weight.size(); i += 5) {
    const double keep = c.weight[i];
    c.weight[i] = keep + 1e-6;
    const double up = objective();
    c.weight[i] = keep - 1e-6;
    const double dn = objective();
    c.weight[i] = keep;
    EXPECT_NEAR(g.weight[i], (up - dn) / 2e-6, 1e-6);
  }
}

TEST(Subnet, FreshSubnetOutputsZero) {
  nn::Subnet<float> s(nn::SubnetSpec{3, 2, 32});
  std::mt19937_64 rng(1);
  s.init(rng, 0.02);
  const auto y = s.forward(uniform<float>(3, 8, 8, 1));
  EXPECT_EQ(y.shape(), (Shape{2, 8, 8}));
  for (std::size_t i = 0; i < y.size(); ++i) ASSERT_EQ(y[i], 0.0f);
  double ss = 0.0;
  for (float w : s.hidden_conv().weight) ss += double(w) * w;
  const double std = std::sqrt(ss / s.hidden_conv().weight.size());
  EXPECT_NEAR(std, 0.02, 0.002);
}

// --- coupling block ---

TEST(Coupling, MatchesBlockFormula) {
  CouplingBlock<double> b(3, 2, 6);
  randomize<double>(b, 4, 0.3);
  const auto cover = uniform<double>(3, 5, 5, 1);
  const auto secret = uniform<double>(2, 5, 5, 2);
  const auto out = b.forward(cover, secret);
  const auto c_ref = cover + naive_subnet(b.e1(), secret);
  EXPECT_LT(max_abs_diff(out.cover, c_ref), 1e-12);
  const auto s3 = naive_subnet(b.e3(), c_ref);
  const auto s2 = naive_subnet(b.e2(), c_ref);
  for (std::size_t i = 0; i < secret.size(); ++i) {
    const double want = secret[i] * std::exp(1.0 / (1.0 + std::exp(-s3[i]))) + s2[i];
    EXPECT_NEAR(out.secret[i], want, 1e-12);
  }
}

TEST(Coupling, ChannelMismatchRejected) {
  CouplingBlock<float> b(3, 2, 4);
  EXPECT_THROW(b.forward(uniform<float>(3, 4, 4, 1), uniform<float>(1, 4, 4, 2)), InputError);
  EXPECT_THROW(b.forward(uniform<float>(3, 4, 4, 1), uniform<float>(2, 4, 5, 2)), InputError);
}

TEST(Coupling, GradientMatchesFiniteDifference) {
  CouplingBlock<double> b(2, 2, 4);
  randomize<double>(b, 5, 0.3);
  auto cover = uniform<double>(2, 4, 4, 1);
  auto secret = uniform<double>(2, 4, 4, 2);
  const auto wc = uniform<double>(2, 4, 4, 3);
  const auto ws = uniform<double>(2, 4, 4, 4);
  auto objective = [&] {
    const auto o = b.forward(cover, secret);
    double s = 0.0;
    for (std::size_t i = 0; i < o.cover.size(); ++i) s += wc[i] * o.cover[i] * o.cover[i];
    for (std::size_t i = 0; i < o.secret.size(); ++i) s += ws[i] * o.secret[i] * o.secret[i];
    return s;
  };
  CouplingForwardTape<double> tape;
  const auto o = b.forward(cover, secret, &tape);
  Tensor<double> dc(o.cover.shape()), ds(o.secret.shape());
  for (std::size_t i = 0; i < dc.size(); ++i) dc[i] = 2 * wc[i] * o.cover[i];
  for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = 2 * ws[i] * o.secret[i];
  CouplingBlock<double> grad(2, 2, 4);
  const auto d = b.backward_forward(tape, dc, ds, grad);
  auto fd = [&](double& v) {
    const double keep = v;
    v = keep + 1e-6;
    const double up = objective();
    v = keep - 1e-6;
    const double dn = objective();
    v = keep;
    return (up - dn) / 2e-6;
  };
  auto close = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
  for (std::size_t i = 0; i < cover.size(); ++i) EXPECT_LT(close(d.cover[i], fd(cover[i])), 1e-5);
  for (std::size_t i = 0; i < secret.size(); ++i) EXPECT_LT(close(d.secret[i], fd(secret[i])), 1e-5);
  std::vector<std::span<double>> params, grads;
  b.for_each_parameter([&](const std::string&, std::span<double> v) { params.push_back(v); });
  grad.for_each_parameter([&](const std::string&, std::span<double> v) { grads.push_back(v); });
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); i += 3) EXPECT_LT(close(grads[p][i], fd(params[p][i])), 1e-5);
  }
}

TEST(Coupling, InverseGradientMatchesFiniteDifference) {
  CouplingBlock<double> b(2, 2, 4);
  randomize<double>(b, 6, 0.3);
  auto co = uniform<double>(2, 4, 4, 1);
  auto so = uniform<double>(2, 4, 4, 2);
  const auto wc = uniform<double>(2, 4, 4, 3);
  const auto ws = uniform<double>(2, 4, 4, 4);
  auto objective = [&] {
    const auto o = b.inverse(co, so);
    double s = 0.0;
    for (std::size_t i = 0; i < o.cover.size(); ++i) s += wc[i] * o.cover[i];
    for (std::size_t i = 0; i < o.secret.size(); ++i) s += ws[i] * o.secret[i] * o.secret[i];
    return s;
  };
  CouplingInverseTape<double> tape;
  const auto o = b.inverse(co, so, &tape);
  Tensor<double> ds(o.secret.shape());
  for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = 2 * ws[i] * o.secret[i];
  CouplingBlock<double> grad(2, 2, 4);
  const auto d = b.backward_inverse(tape, wc, ds, grad);
  auto fd = [&](double& v) {
    const double keep = v;
    v = keep + 1e-6;
    const double up = objective();
    v = keep - 1e-6;
    const double dn = objective();
    v = keep;
    return (up - dn) / 2e-6;
  };
  for (std::size_t i = 0; i < co.size(); ++i) EXPECT_NEAR(d.cover[i], fd(co[i]), 1e-6);
  for (std::size_t i = 0; i < so.size(); ++i) EXPECT_NEAR(d.secret[i], fd(so[i]), 1e-6);
}

// --- stack ---

TEST(Stack, ZeroWeightsScaleSecretByE4) {
  INNStack<double> s(StackSpec{3, 2, 8, 8});
  const auto cover = uniform<double>(3, 6, 6, 1);
  const auto secret = uniform<double>(2, 6, 6, 2);
  const auto e = s.forward_embed(cover, secret);
  EXPECT_TRUE(e.container == cover);
  for (std::size_t i = 0; i < secret.size(); ++i) EXPECT_NEAR(e.latent[i], secret[i] * std::exp(4.0), 1e-12);
  const auto r = s.backward_reveal(e.container, e.latent);
  for (std::size_t i = 0; i < secret.size(); ++i) EXPECT_NEAR(r.secret[i], e.latent[i] * std::exp(-4.0), 1e-12);
}

TEST(Stack, InitIsIdentityOnCover) {
  INNStack<float> s(StackSpec{3, 4, 32, 8});
  s.init_weights(11);
  const auto cover = uniform<float>(3, 10, 10, 1);
  const auto e = s.forward_embed(cover, uniform<float>(4, 10, 10, 2));
  EXPECT_TRUE(e.container == cover);
  // Zero seed reveals silence and the cover itself.
  const auto r = s.reveal_deployed(e.container);
  for (std::size_t i = 0; i < r.secret.size(); ++i) ASSERT_EQ(r.secret[i], 0.0f);
  EXPECT_TRUE(r.cover == cover);
}

TEST(Stack, RandomWeightsPerturbButStayFinite) {
  INNStack<float> s(StackSpec{3, 2, 8, 8});
  randomize<float>(s, 12, 0.02);
  const auto cover = uniform<float>(3, 8, 8, 1);
  const auto e = s.forward_embed(cover, uniform<float>(2, 8, 8, 2));
  EXPECT_TRUE(e.container.all_finite());
  EXPECT_TRUE(e.latent.all_finite());
  EXPECT_GT(max_abs_diff(e.container, cover), 0.0f);
}

TEST(Stack, InvertibleForManySeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    INNStack<double> s(StackSpec{3, 2, 8, 8});
    randomize<double>(s, seed, 0.02);
    const auto cover = uniform<double>(3, 8, 8, seed + 1000);
    const auto secret = uniform<double>(2, 8, 8, seed + 2000);
    const auto e = s.forward_embed(cover, secret);
    const auto r = s.backward_reveal(e.container, e.latent);
    ASSERT_LT(max_abs_diff(r.cover, cover), 1e-9) << seed;
    ASSERT_LT(max_abs_diff(r.secret, secret), 1e-9) << seed;
  }
}

TEST(Stack, FloatInverseWithinTolerance) {
  INNStack<float> s(StackSpec{3, 4, 32, 8});
  randomize<float>(s, 13, 0.02);
  const auto cover = uniform<float>(3, 16, 16, 1);
  const auto secret = uniform<float>(4, 16, 16, 2);
  const auto e = s.forward_embed(cover, secret);
  const auto r = s.backward_reveal(e.container, e.latent);
  EXPECT_LT(max_abs_diff(r.cover, cover), 1e-3f);
  EXPECT_LT(max_abs_diff(r.secret, secret), 1e-3f);
}

TEST(Stack, ComposesFromSingleBlocks) {
  INNStack<float> full(StackSpec{3, 2, 8, 8});
  randomize<float>(full, 14, 0.05);
  const auto cover = uniform<float>(3, 8, 8, 1);
  const auto secret = uniform<float>(2, 8, 8, 2);
  BranchPair<float> state{cover, secret};
  for (std::size_t i = 0; i < 8; ++i) {
    INNStack<float> one(StackSpec{3, 2, 8, 1});
    one.block(0) = full.block(i);
    auto e = one.forward_embed(state.cover, state.secret);
    state = {e.container, e.latent};
  }
  const auto e = full.forward_embed(cover, secret);
  EXPECT_LT(max_abs_diff(state.cover, e.container), 1e-5f);
  EXPECT_LT(max_abs_diff(state.secret, e.latent), 1e-5f);
}

TEST(Stack, InitDeterministicInSeed) {
  INNStack<float> a(StackSpec{}), b(StackSpec{}), c(StackSpec{});
  a.init_weights(42);
  b.init_weights(42);
  c.init_weights(43);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(Stack, RevealIsDeterministic) {
  INNStack<float> s(StackSpec{3, 2, 8, 8});
  randomize<float>(s, 15, 0.05);
  const auto container = uniform<float>(3, 8, 8, 1);
  EXPECT_TRUE(s.reveal_deployed(container).secret == s.reveal_deployed(container).secret);
}

TEST(Stack, ParameterCount) {
  // Three subnets per block, each conv(in->32) + conv(32->out) with biases.
  INNStack<float> s(StackSpec{3, 2, 32, 8});
  const std::size_t e1 = (2 * 32 * 9 + 32) + (32 * 3 * 9 + 3);
  const std::size_t e2 = (3 * 32 * 9 + 32) + (32 * 2 * 9 + 2);
  EXPECT_EQ(s.parameter_count(), 8 * (e1 + 2 * e2));
  EXPECT_EQ(s.block_count(), 8u);
}

}  // namespace
}  // namespace imgvox::inn
