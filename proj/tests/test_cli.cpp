// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "imgvox/cli/commands.hpp"

namespace imgvox::cli {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "imgvox");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), Streams{out, err});
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("imgvox_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// An untrained checkpoint; zero-init output convs make every block the identity.
fs::path write_zero_checkpoint(const fs::path& dir, int size, double max_s, int depth = 1) {
  train::CheckpointMeta meta;
  meta.config.image_size = size;
  meta.config.hidden_channels = 4;
  meta.config.blocks = 2;
  meta.config.duration_max_s = max_s;
  meta.config.nested_depth = depth;
  meta.mel_reference = audio::default_mel_reference();
  meta.stft_scale = packer::stft_full_scale();
  meta.secret_channels = meta.config.secret_channels();
  meta.depth = depth;
  for (int k = 1; k <= depth; ++k) meta.layers.push_back(k);
  nested::NestedStack<float> stack(depth, meta.secret_channels, 3, 4, 2);
  stack.init_weights(3);
  const fs::path path = dir / "zero.thii";
  train::save_checkpoint(path, stack, meta);
  return path;
}

TEST(Cli, InfoForTenSeconds) {
  const auto r = invoke({"info", "--duration", "10"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("c=2\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("ratio_vs_raw=2/7"), std::string::npos) << r.out;
}

TEST(Cli, InfoRawMatchesChannelArithmetic) {
  const auto r = invoke({"info", "--duration", "10", "--format", "raw"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("c=7\n"), std::string::npos) << r.out;
  // 7 planes of 160x160 minus 160000 samples.
  EXPECT_NE(r.out.find("pad_cells=19200\n"), std::string::npos) << r.out;
}

TEST(Cli, UsageExitCodes) {
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsage);
  EXPECT_EQ(invoke({}).code, kUsage);
  EXPECT_EQ(invoke({"info"}).code, kUsage);
  EXPECT_EQ(invoke({"info", "--duration", "1", "--size", "100"}).code, kUsage);
  const auto help = invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("nested-reveal"), std::string::npos);
}

TEST(Cli, MissingCheckpointIsCheckpointError) {
  const auto dir = scratch("missing");
  const auto r = invoke({"reveal", "--checkpoint", (dir / "none.thii").string(), "--image", "x.png", "--out",
                         (dir / "o.wav").string()});
  EXPECT_EQ(r.code, kCheckpoint);
  EXPECT_NE(r.err.find("none.thii"), std::string::npos);
}

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(UsageError("x")), kUsage);
  EXPECT_EQ(exit_code_for(ConfigError("x")), kUsage);
  EXPECT_EQ(exit_code_for(PermissionError("x")), kCheckpoint);
  EXPECT_EQ(exit_code_for(CheckpointError("x")), kCheckpoint);
  EXPECT_EQ(exit_code_for(InputError("x")), kData);
}

TEST(Cli, ToyTrainWritesCheckpointAndLog) {
  const auto dir = scratch("train");
  const auto c = testing::write_corpus(dir, 8, 64, 1.0, 20);
  testing::write_text(dir / "toy.cfg",
                      "epochs = 2\nlearning_rate = 2e-4\nbatch_size = 2\nseed = 5\nimage_size = 64\n"
                      "duration_range_s = 0-1\nformat = mel\nhidden_channels = 4\nblocks = 2\n");
  const auto r = invoke({"train", "--config", (dir / "toy.cfg").string(), "--images", c.images.string(), "--audio",
                         c.audio.string(), "--out", (dir / "toy.thii").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ck = train::load_checkpoint(dir / "toy.thii");
  EXPECT_EQ(ck.meta.config.image_size, 64);
  EXPECT_GT(ck.meta.steps, 0);
  const auto log = testing::read_text(dir / "toy.thii.loss.csv");
  EXPECT_EQ(log.substr(0, log.find('\n')), train::loss_log_header(1));
  EXPECT_EQ(static_cast<long>(std::count(log.begin(), log.end(), '\n')), ck.meta.steps + 1);
}

TEST(Cli, ZeroInitEmbedKeepsPixels) {
  const auto dir = scratch("embed");
  const auto c = testing::write_corpus(dir, 1, 64, 0.5, 30);
  const auto ckpt = write_zero_checkpoint(dir, 64, 1.0);
  const auto out = dir / "container.png";
  const auto r = invoke({"embed", "--checkpoint", ckpt.string(), "--image", (c.images / "000.png").string(),
                         "--audio", (c.audio / "000.wav").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cover = data::read_image(c.images / "000.png").pixels;
  const auto container = data::read_image(out);
  EXPECT_TRUE(container.pixels == cover);
  const auto meta = nlohmann::json::parse(container.text.at(kMetadataKey));
  EXPECT_EQ(meta.at("samples").get<std::vector<std::size_t>>(), std::vector<std::size_t>{8000});
}

TEST(Cli, RevealOfPlainPhotoIsSilentWithZeroInit) {
  const auto dir = scratch("photo");
  const auto c = testing::write_corpus(dir, 1, 64, 0.5, 40);
  const auto ckpt = write_zero_checkpoint(dir, 64, 1.0);
  const auto wav = dir / "out.wav";
  const auto r = invoke({"reveal", "--checkpoint", ckpt.string(), "--image", (c.images / "000.png").string(),
                         "--out", wav.string(), "--duration", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto w = audio::read_wav(wav);
  ASSERT_EQ(w.size(), 8000u);
  double peak = 0.0;
  for (float s : w.samples()) peak = std::max(peak, std::abs(static_cast<double>(s)));
  EXPECT_LT(peak, 1e-3);
}

TEST(Cli, RevealWithoutMetadataNeedsDuration) {
  const auto dir = scratch("nometa");
  const auto c = testing::write_corpus(dir, 1, 64, 0.5, 50);
  const auto ckpt = write_zero_checkpoint(dir, 64, 1.0);
  const auto r = invoke({"reveal", "--checkpoint", ckpt.string(), "--image", (c.images / "000.png").string(),
                         "--out", (dir / "o.wav").string()});
  EXPECT_EQ(r.code, kUsage);
  EXPECT_NE(r.err.find("--duration"), std::string::npos);
}

TEST(Cli, ClipLongerThanCheckpointNamesLimit) {
  const auto dir = scratch("long");
  data::write_png(dir / "face.png", data::synthetic::face_like(160, 1));
  audio::write_wav(dir / "long.wav", audio::Waveform::silence(audio::samples_for_duration(90.0)));
  const auto ckpt = write_zero_checkpoint(dir, 160, 80.0);
  const auto r = invoke({"embed", "--checkpoint", ckpt.string(), "--image", (dir / "face.png").string(), "--audio",
                         (dir / "long.wav").string(), "--out", (dir / "c.png").string()});
  EXPECT_EQ(r.code, kData);
  EXPECT_NE(r.err.find("80 s"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "c.png"));
}

TEST(Cli, NestedRevealNeedsEveryLowerLayer) {
  const auto dir = scratch("nested");
  data::write_png(dir / "face.png", data::synthetic::face_like(64, 2));
  const auto ckpt = write_zero_checkpoint(dir, 64, 1.0, 2);
  ASSERT_EQ(invoke({"split", "--checkpoint", ckpt.string(), "--out", (dir / "parts").string()}).code, 0);
  const auto r = invoke({"nested-reveal", "--checkpoint", (dir / "parts" / "layer1.thii").string(), "--image",
                         (dir / "face.png").string(), "--level", "2", "--out", (dir / "o").string(), "--duration",
                         "0.5"});
  EXPECT_EQ(r.code, kCheckpoint);
  const auto ok = invoke({"nested-reveal", "--checkpoint", (dir / "parts" / "layer1.thii").string(), "--checkpoint",
                          (dir / "parts" / "layer2.thii").string(), "--image", (dir / "face.png").string(), "--level",
                          "2", "--out", (dir / "o").string(), "--duration", "0.5"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(fs::exists(dir / "o" / "level2.wav"));
}

TEST(Cli, BinaryRunsAsSubprocess) {
  const auto r = testing::run_cli(IMGVOX_CLI_PATH, {"info", "--duration", "20"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("c=4\n"), std::string::npos) << r.output;
}

}  // namespace
}  // namespace imgvox::cli
