// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "imgvox/data/synthetic.hpp"
#include "imgvox/metrics/quality.hpp"
#include "imgvox/metrics/report.hpp"

namespace imgvox::metrics {
namespace {

Tensor<float> image(int size, std::uint64_t seed) { return data::synthetic::face_like(size, seed); }

Tensor<float> plus_noise(const Tensor<float>& x, double std, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std);
  Tensor<float> y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<float>(std::clamp(y[i] + n(rng), 0.0, 1.0));
  return y;
}

audio::Waveform tone(double hz, double amp, std::size_t n) {
  std::vector<float> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * hz * i / 16000.0));
  return audio::Waveform(std::move(s));
}

TEST(Psnr, KnownValues) {
  Tensor<double> a(3, 8, 8, 0.25);
  EXPECT_EQ(psnr(a, a), 100.0);
  Tensor<double> b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 1.0 / 255.0;
  EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(255.0), 1e-9);
  EXPECT_NEAR(psnr(a, b), 48.13, 0.01);
  Tensor<double> c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += 0.5;
  EXPECT_NEAR(psnr(a, c), 6.02, 0.01);
}

TEST(Psnr, Errors) {
  EXPECT_THROW(psnr(Tensor<float>(1, 2, 2), Tensor<float>(1, 2, 3)), InputError);
  EXPECT_THROW(psnr(Tensor<float>(), Tensor<float>()), InputError);
}

TEST(Ssim, IdentityIsOne) {
  const auto x = image(32, 1);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);
}

TEST(Ssim, InvertedImageScoresLow) {
  const auto x = image(32, 2);
  Tensor<float> inv = x;
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0f - inv[i];
  EXPECT_LT(ssim(x, inv), 0.2);
}

// Constant images: every window has zero variance, so SSIM reduces to the
// luminance term (2ab + C1) / (a^2 + b^2 + C1).
TEST(Ssim, ConstantImagesMatchClosedForm) {
  const double a = 0.3, b = 0.6, c1 = 0.01 * 0.01;
  EXPECT_NEAR(ssim(Tensor<double>(1, 16, 16, a), Tensor<double>(1, 16, 16, b)),
              (2 * a * b + c1) / (a * a + b * b + c1), 1e-9);
}

TEST(Ssim, SymmetricAndBounded) {
  const auto x = image(24, 3);
  const auto y = plus_noise(x, 0.1, 4);
  EXPECT_NEAR(ssim(x, y), ssim(y, x), 1e-12);
  EXPECT_LE(ssim(x, y), 1.0);
  EXPECT_GE(ssim(x, y), -1.0);
  EXPECT_THROW(ssim(Tensor<float>(3, 8, 8), Tensor<float>(3, 8, 8)), InputError);
}

TEST(Quality, MonotoneInNoise) {
  const auto x = image(48, 5);
  double prev_p = 1e9, prev_s = 2.0;
  for (double std : {0.01, 0.03, 0.1, 0.3}) {
    const auto y = plus_noise(x, std, 6);
    const double p = psnr(x, y), s = ssim(x, y);
    EXPECT_LT(p, prev_p) << std;
    EXPECT_LT(s, prev_s) << std;
    prev_p = p;
    prev_s = s;
  }
}

TEST(Lsd, IdenticalIsZero) {
  const auto w = tone(440.0, 0.5, 16000);
  EXPECT_EQ(lsd(w, w), 0.0);
}

TEST(Lsd, DoubledAmplitudeIsSixDecibels) {
  const auto a = tone(440.0, 0.25, 16000);
  const auto b = tone(440.0, 0.5, 16000);
  EXPECT_NEAR(lsd(a, b), 20.0 * std::log10(2.0), 1e-3);
  EXPECT_NEAR(lsd(a, b), lsd(b, a), 1e-12);
}

TEST(Lsd, UsesCommonLength) {
  const auto a = tone(440.0, 0.5, 16000);
  const auto b = audio::fit_length(a, 8000);
  EXPECT_EQ(lsd(a, b), 0.0);
  EXPECT_THROW(lsd(a, audio::Waveform()), InputError);
}

TEST(Report, CsvRoundTrip) {
  QualityReport r;
  r.rows.push_back({"0-10", "mel", 1, 35.25, 0.97, 3.5, 32});
  r.rows.push_back({"0-20", "mel", 2, 31.0, 0.9, 4.125, 32});
  const auto csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  const auto back = parse_csv(csv);
  EXPECT_EQ(back.rows, r.rows);
}

TEST(Report, CsvRejectsJunk) {
  EXPECT_THROW(parse_csv("a,b\n"), InputError);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\n0-1,mel,1,x,1,1,1\n"), InputError);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\n0-1,mel,1\n"), InputError);
}

TEST(Report, TableHasHeaderAndRows) {
  QualityReport r;
  r.rows.push_back({"0-10", "mel", 1, 35.25, 0.97, 3.5, 32});
  r.notes.push_back("synthetic corpus");
  const auto t = to_table(r);
  EXPECT_NE(t.find("psnr_db"), std::string::npos);
  EXPECT_NE(t.find("35.25"), std::string::npos);
  EXPECT_NE(t.find("# synthetic corpus"), std::string::npos);
  EXPECT_EQ(range_label(0.0, 2.5), "0-2.5");
}

TEST(Sweep, EmptySweepGivesEmptyReport) {
  EXPECT_TRUE(capacity_sweep({}, {}).rows.empty());
}

TEST(Sweep, NullCheckpointIsError) {
  EXPECT_THROW(capacity_sweep({{"", 0.0, 1.0, nullptr}}, {}), InputError);
}

train::LoadedCheckpoint zero_init_checkpoint(int depth) {
  train::LoadedCheckpoint ck;
  ck.meta.config.image_size = 32;
  ck.meta.config.hidden_channels = 4;
  ck.meta.config.blocks = 2;
  ck.meta.config.duration_max_s = 1.0;
  ck.meta.config.nested_depth = depth;
  ck.meta.mel_reference = audio::default_mel_reference();
  ck.meta.stft_scale = packer::stft_full_scale();
  ck.meta.secret_channels = ck.meta.config.secret_channels();
  ck.meta.depth = depth;
  ck.stack = nested::NestedStack<float>(depth, ck.meta.secret_channels, 3, 4, 2);
  ck.stack.init_weights(1);
  return ck;
}

TEST(Sweep, ZeroInitCheckpointRows) {
  const auto ck = zero_init_checkpoint(2);
  std::vector<EvalItem> items;
  for (int i = 0; i < 3; ++i) items.push_back({image(40, i), tone(300.0 + 50 * i, 0.4, 16000)});
  const auto report = capacity_sweep({{"", 0.5, 1.0, &ck}}, items);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].range_s, "0.5-1");
  EXPECT_EQ(report.rows[0].layer, 1);
  EXPECT_EQ(report.rows[1].layer, 2);
  EXPECT_EQ(report.rows[0].n_samples, 3u);
  // The untouched container only differs from the cover by 8-bit rounding.
  EXPECT_GT(report.rows[0].psnr_db, 50.0);
  EXPECT_GT(report.rows[0].ssim, 0.99);
  // A zero-seed reveal from an untrained model is silence, far from the clip.
  EXPECT_GT(report.rows[0].lsd_db, 10.0);
}

TEST(Sweep, LabelOverridesRange) {
  const auto ck = zero_init_checkpoint(1);
  const std::vector<EvalItem> items = {{image(32, 9), tone(440.0, 0.4, 16000)}};
  const auto report = capacity_sweep({{"short", 0.5, 1.0, &ck}}, items);
  EXPECT_EQ(report.rows.at(0).range_s, "short");
}

}  // namespace
}  // namespace imgvox::metrics
