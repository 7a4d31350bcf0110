// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "imgvox/audio/wav_io.hpp"
#include "imgvox/core/atomic_file.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/data/corpus.hpp"
#include "imgvox/data/image_io.hpp"
#include "imgvox/metrics/report.hpp"
#include "imgvox/nested/nested.hpp"
#include "imgvox/packer/codec.hpp"
#include "imgvox/train/checkpoint.hpp"
#include "imgvox/train/config.hpp"
#include "imgvox/train/loop.hpp"

namespace imgvox::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kCheckpoint = 3 };

// Bad or missing command-line input that is not a data problem.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kMetadataKey = "imgvox";

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const PermissionError*>(&e) || dynamic_cast<const CheckpointError*>(&e)) return kCheckpoint;
  return kData;
}

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

namespace detail {

inline train::LoadedCheckpoint load_checkpoints(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("at least one --checkpoint is required");
  std::vector<train::LoadedCheckpoint> parts;
  for (const auto& p : paths) {
    try {
      parts.push_back(train::load_checkpoint(p));
    } catch (const IoError& e) {
      throw CheckpointError(e.what());
    }
  }
  return train::merge_checkpoints(parts);
}

inline packer::PackOptions pack_options(const train::LoadedCheckpoint& ck) {
  const auto& cfg = ck.meta.config;
  return {cfg.format, cfg.geometry(), ck.meta.mel_reference, ck.meta.stft_scale, ck.meta.secret_channels};
}

inline Tensor<float> load_cover(const std::string& path, int size) {
  return data::resize_bilinear(data::read_image(path).pixels, size, size);
}

inline audio::Waveform load_clip(const std::string& path, const train::LoadedCheckpoint& ck) {
  const auto wave = audio::read_wav(path);
  const double cap = ck.meta.config.duration_max_s;
  if (wave.size() > audio::samples_for_duration(cap)) {
    std::ostringstream msg;
    msg << path << " is " << wave.duration_s() << " s; this checkpoint holds at most " << cap << " s";
    throw InputError(msg.str());
  }
  if (wave.empty()) throw InputError(path + " has no samples");
  return wave;
}

// Creates and removes a probe file so unwritable destinations fail before
// any expensive work.
inline void probe_writable(const fs::path& path) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path probe = dir / (path.filename().string() + ".probe");
  {
    std::ofstream f(probe, std::ios::binary);
    if (!f) throw IoError("cannot write to " + dir.string());
  }
  fs::remove(probe);
}

inline Tensor<float> read_container(const std::string& path, int size, data::TextChunks* text) {
  auto img = data::read_image(path);
  if (img.pixels.height() != size || img.pixels.width() != size) {
    throw InputError(path + " is " + std::to_string(img.pixels.width()) + "x" + std::to_string(img.pixels.height()) +
                     "; this checkpoint expects " + std::to_string(size) + "x" + std::to_string(size));
  }
  if (text != nullptr) *text = img.text;
  return img.pixels;
}

// Sample counts per level, from PNG metadata or the --duration flag.
inline std::vector<std::size_t> level_lengths(const data::TextChunks& text, const std::vector<double>& durations,
                                              std::size_t levels) {
  std::vector<std::size_t> out;
  if (!durations.empty()) {
    for (double d : durations) {
      if (!(d > 0.0)) throw UsageError("--duration must be positive");
      out.push_back(audio::samples_for_duration(d));
    }
  } else if (const auto it = text.find(kMetadataKey); it != text.end()) {
    try {
      const auto j = nlohmann::json::parse(it->second);
      out = j.at("samples").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("container metadata is unreadable: ") + e.what());
    }
  } else {
    throw UsageError("container has no metadata; pass --duration");
  }
  if (out.size() == 1 && levels > 1) out.resize(levels, out.front());
  if (out.size() < levels) throw UsageError("need a duration for each of the " + std::to_string(levels) + " levels");
  return out;
}

inline void write_clip(const fs::path& path, const Tensor<float>& revealed, std::size_t samples,
                       const packer::PackOptions& po) {
  packer::PackedSecret p;
  p.meta = packer::meta_for(samples, po);
  p.tensor = revealed.cast<double>();
  write_wav(path, packer::unpack_audio(p));
}

inline nlohmann::json container_metadata(const train::LoadedCheckpoint& ck, const std::vector<std::size_t>& samples) {
  std::vector<double> seconds;
  for (auto n : samples) seconds.push_back(static_cast<double>(n) / audio::kSampleRate);
  return {{"samples", samples},
          {"duration_s", seconds},
          {"format", packer::to_string(ck.meta.config.format)},
          {"channels", ck.meta.secret_channels},
          {"depth", samples.size()}};
}

}  // namespace detail

inline int cmd_info(double duration_s, const std::string& format, int size, Streams io) {
  const auto f = packer::parse_format(format);
  const packer::Geometry g{size, size};
  const std::size_t n = audio::samples_for_duration(duration_s);
  const int c = packer::channels_for(duration_s, f, g);
  std::size_t used = 0;
  switch (f) {
    case packer::SecretFormat::mel: used = audio::content_frames(n) * packer::kMelBins; break;
    case packer::SecretFormat::raw: used = n; break;
    case packer::SecretFormat::stft: used = packer::stft_format_frames(n) * 2 * packer::kStftKeptBins; break;
  }
  const int raw_c = packer::channels_for(duration_s, packer::SecretFormat::raw, g);
  io.out << "duration_s=" << duration_s << " format=" << format << " size=" << size << "\n"
         << "c=" << c << "\n"
         << "pad_cells=" << static_cast<std::size_t>(c) * g.cells() - used << "\n"
         << "ratio_vs_raw=" << c << "/" << raw_c << " (" << static_cast<double>(c) / raw_c << ")\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string images;
  std::string audio;
  std::string out;
  std::string log;
  std::optional<std::uint64_t> seed;
  std::optional<int> size;
  std::optional<std::string> format;
};

inline int cmd_train(const TrainArgs& a, Streams io) {
  auto cfg = train::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.size) cfg.image_size = *a.size;
  if (a.format) cfg.format = packer::parse_format(*a.format);
  cfg.validate();
  const fs::path out = a.out;
  const fs::path log = a.log.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.log);
  detail::probe_writable(out);
  detail::probe_writable(log);

  const auto idx = data::build_index(a.images, a.audio, cfg.split_ratio, cfg.seed);
  for (const auto& w : idx.warnings) io.err << "warning: " << w << "\n";
  const auto material = train::load_training_data(idx, data::Split::train);
  std::ostringstream csv;
  csv << train::loss_log_header(cfg.nested_depth) << "\n";
  const auto result = train::run_training(cfg, material, [&](int epoch, const train::StepReport& r) {
    csv << train::loss_log_line(epoch, r) << "\n";
  });
  train::save_checkpoint(out, result.stack, result.meta);
  const std::string text = csv.str();
  atomic_write(log, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  io.out << "trained " << result.meta.steps << " steps on " << material.images.size() << " pairs; final loss "
         << (result.steps.empty() ? 0.0 : result.steps.back().total) << "\n"
         << "wrote " << out.string() << "\n"
         << "wrote " << log.string() << "\n";
  return kOk;
}

struct EmbedArgs {
  std::vector<std::string> checkpoints;
  std::string image;
  std::vector<std::string> audio;  // one per level
  std::string out;
  bool no_metadata = false;
};

// Hides one clip per level in the image. Plain embed is the one-level case.
inline int cmd_embed(const EmbedArgs& a, Streams io) {
  const auto ck = detail::load_checkpoints(a.checkpoints);
  const int depth = ck.stack.depth();
  if (static_cast<int>(a.audio.size()) != depth) {
    throw UsageError("checkpoint has " + std::to_string(depth) + " level(s); got " + std::to_string(a.audio.size()) +
                     " --audio file(s)");
  }
  detail::probe_writable(a.out);
  const auto po = detail::pack_options(ck);
  const auto cover = detail::load_cover(a.image, ck.meta.config.image_size);
  std::vector<Tensor<float>> secrets;
  std::vector<std::size_t> samples;
  for (const auto& path : a.audio) {
    const auto wave = detail::load_clip(path, ck);
    samples.push_back(wave.size());
    secrets.push_back(packer::pack_audio(wave, po).tensor.cast<float>());
  }
  const auto enc = nested::nested_encode(ck.stack, cover, secrets);
  data::TextChunks text;
  if (!a.no_metadata) text[kMetadataKey] = detail::container_metadata(ck, samples).dump();
  data::write_png(a.out, enc.container, text);
  io.out << "embedded " << depth << " clip(s) into " << a.out << " (" << ck.meta.config.image_size << "x"
         << ck.meta.config.image_size << ", c=" << ck.meta.secret_channels << ")\n";
  return kOk;
}

struct RevealArgs {
  std::vector<std::string> checkpoints;
  std::string image;
  std::string out;  // WAV path (level 1) or directory (nested)
  int level = 1;
  std::vector<double> durations;
  bool nested = false;
};

inline int cmd_reveal(const RevealArgs& a, Streams io) {
  const auto ck = detail::load_checkpoints(a.checkpoints);
  if (a.level < 1 || a.level > ck.stack.depth()) {
    throw UsageError("--level must be in [1, " + std::to_string(ck.stack.depth()) + "]");
  }
  for (int k = 1; k <= a.level; ++k) {
    if (!ck.stack.has_layer(k)) {
      throw PermissionError("level " + std::to_string(a.level) + " needs a checkpoint for layer " + std::to_string(k));
    }
  }
  data::TextChunks text;
  const auto container = detail::read_container(a.image, ck.meta.config.image_size, &text);
  const auto lengths = detail::level_lengths(text, a.durations, static_cast<std::size_t>(a.level));
  const auto po = detail::pack_options(ck);
  const auto dec = nested::nested_decode(ck.stack, container, a.level);

  std::vector<fs::path> outputs;
  if (a.nested) {
    fs::create_directories(a.out);
    for (int k = 1; k <= a.level; ++k) outputs.push_back(fs::path(a.out) / ("level" + std::to_string(k) + ".wav"));
  } else {
    outputs.push_back(a.out);
  }
  for (const auto& p : outputs) detail::probe_writable(p);
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    detail::write_clip(outputs[k], dec[k].secret, lengths[k], po);
    io.out << "wrote " << outputs[k].string() << " (" << static_cast<double>(lengths[k]) / audio::kSampleRate
           << " s)\n";
  }
  return kOk;
}

struct EvalArgs {
  std::vector<std::string> checkpoints;  // one per duration range
  std::string images;
  std::string audio;
  std::string out;  // CSV
  std::string table;
  std::size_t limit = 0;
  std::uint64_t seed = 0;
};

inline int cmd_eval(const EvalArgs& a, Streams io) {
  if (a.checkpoints.empty()) throw UsageError("at least one --checkpoint is required");
  detail::probe_writable(a.out);
  std::vector<train::LoadedCheckpoint> cks;
  for (const auto& p : a.checkpoints) cks.push_back(detail::load_checkpoints({p}));
  const auto idx = data::build_index(a.images, a.audio, cks.front().meta.config.split_ratio, a.seed);
  const auto split = idx.test_images.empty() || idx.test_audio.empty() ? data::Split::train : data::Split::test;
  const auto material = train::load_training_data(idx, split);
  std::vector<metrics::EvalItem> items;
  const std::size_t n = a.limit ? std::min(a.limit, material.images.size()) : material.images.size();
  for (std::size_t i = 0; i < n; ++i) items.push_back({material.images[i], material.clips[i % material.clips.size()]});
  std::vector<metrics::SweepEntry> entries;
  for (const auto& ck : cks) entries.push_back({"", ck.meta.config.duration_min_s, ck.meta.config.duration_max_s, &ck});
  metrics::SweepOptions opt;
  opt.seed = a.seed;
  const auto report = metrics::capacity_sweep(entries, items, opt);
  const std::string csv = metrics::to_csv(report);
  atomic_write(a.out, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
  const std::string table = metrics::to_table(report);
  if (!a.table.empty()) {
    atomic_write(a.table,
                 std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(table.data()), table.size()));
  }
  io.out << table;
  return kOk;
}

// Writes one checkpoint per layer present in the input.
inline int cmd_split(const std::vector<std::string>& checkpoints, const std::string& out_dir, Streams io) {
  const auto ck = detail::load_checkpoints(checkpoints);
  fs::create_directories(out_dir);
  for (int k : ck.meta.layers) {
    nested::NestedStack<float> part = ck.stack;
    for (int j = 1; j <= part.depth(); ++j) {
      if (j != k) part.drop_layer(j);
    }
    const fs::path path = fs::path(out_dir) / ("layer" + std::to_string(k) + ".thii");
    train::CheckpointMeta meta = ck.meta;
    meta.layers = {k};
    train::save_checkpoint(path, part, meta);
    io.out << "wrote " << path.string() << "\n";
  }
  return kOk;
}

// Parses argv and dispatches. Returns the process exit code.
inline int run(int argc, const char* const* argv, Streams io = {}) {
  CLI::App app{"Hide speech in face images with an invertible network", "imgvox"};
  app.require_subcommand(1);

  TrainArgs train_args;
  std::uint64_t seed_value = 0;
  int size_value = 0;
  std::string format_value;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint plus a loss log");
  train_cmd->add_option("--config", train_args.config, "Config file (key = value)")->required();
  train_cmd->add_option("--images", train_args.images, "Image directory")->required();
  train_cmd->add_option("--audio", train_args.audio, "WAV directory")->required();
  train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", train_args.log, "Loss log CSV (default: <out>.loss.csv)");
  auto* seed_opt = train_cmd->add_option("--seed", seed_value, "Override the config seed");
  auto* size_opt = train_cmd->add_option("--size", size_value, "Override image_size")->check(CLI::IsMember({64, 160}));
  auto* format_opt = train_cmd->add_option("--format", format_value, "Override format")
                         ->check(CLI::IsMember({"mel", "raw", "stft"}));

  EmbedArgs embed_args;
  auto* embed_cmd = app.add_subcommand("embed", "Hide a clip in an image");
  embed_cmd->add_option("--checkpoint", embed_args.checkpoints, "Checkpoint file(s)")->required();
  embed_cmd->add_option("--image", embed_args.image, "Cover image (PNG/JPEG)")->required();
  embed_cmd->add_option("--audio", embed_args.audio, "Clip to hide (WAV)")->required()->expected(1);
  embed_cmd->add_option("--out", embed_args.out, "Container PNG")->required();
  embed_cmd->add_flag("--no-metadata", embed_args.no_metadata, "Do not store the duration in the PNG");

  RevealArgs reveal_args;
  auto* reveal_cmd = app.add_subcommand("reveal", "Recover the clip from a container");
  reveal_cmd->add_option("--checkpoint", reveal_args.checkpoints, "Checkpoint file(s)")->required();
  reveal_cmd->add_option("--image", reveal_args.image, "Container PNG")->required();
  reveal_cmd->add_option("--out", reveal_args.out, "Output WAV")->required();
  reveal_cmd->add_option("--duration", reveal_args.durations, "Clip duration in seconds")->expected(0, 1);

  EmbedArgs nembed_args;
  auto* nembed_cmd = app.add_subcommand("nested-embed", "Hide one clip per level in an image");
  nembed_cmd->add_option("--checkpoint", nembed_args.checkpoints, "Checkpoint file(s), all layers")->required();
  nembed_cmd->add_option("--image", nembed_args.image, "Cover image")->required();
  nembed_cmd->add_option("--audio", nembed_args.audio, "Clips, level 1 first (repeat)")->required();
  nembed_cmd->add_option("--out", nembed_args.out, "Container PNG")->required();
  nembed_cmd->add_flag("--no-metadata", nembed_args.no_metadata, "Do not store durations in the PNG");

  RevealArgs nreveal_args;
  nreveal_args.nested = true;
  auto* nreveal_cmd = app.add_subcommand("nested-reveal", "Recover clips up to an access level");
  nreveal_cmd->add_option("--checkpoint", nreveal_args.checkpoints, "Checkpoint file(s) for layers 1..level")
      ->required();
  nreveal_cmd->add_option("--image", nreveal_args.image, "Container PNG")->required();
  nreveal_cmd->add_option("--level", nreveal_args.level, "Access level")->required();
  nreveal_cmd->add_option("--out", nreveal_args.out, "Output directory (level<k>.wav)")->required();
  nreveal_cmd->add_option("--duration", nreveal_args.durations, "Duration per level in seconds (repeat)");

  double info_duration = 0.0;
  std::string info_format = "mel";
  int info_size = 160;
  auto* info_cmd = app.add_subcommand("info", "Print channel arithmetic for a clip length");
  info_cmd->add_option("--duration", info_duration, "Seconds")->required();
  info_cmd->add_option("--format", info_format, "mel, raw or stft")->check(CLI::IsMember({"mel", "raw", "stft"}));
  info_cmd->add_option("--size", info_size, "Image side")->check(CLI::IsMember({64, 160}));

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Measure container and audio quality per duration range");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoints, "One checkpoint per range (repeat)")->required();
  eval_cmd->add_option("--images", eval_args.images, "Image directory")->required();
  eval_cmd->add_option("--audio", eval_args.audio, "WAV directory")->required();
  eval_cmd->add_option("--out", eval_args.out, "Report CSV")->required();
  eval_cmd->add_option("--table", eval_args.table, "Also write the text table here");
  eval_cmd->add_option("--limit", eval_args.limit, "Evaluate at most this many pairs");
  eval_cmd->add_option("--seed", eval_args.seed, "Duration draw seed");

  std::vector<std::string> split_ckpts;
  std::string split_dir;
  auto* split_cmd = app.add_subcommand("split", "Write one checkpoint file per layer");
  split_cmd->add_option("--checkpoint", split_ckpts, "Checkpoint file(s)")->required();
  split_cmd->add_option("--out", split_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*train_cmd) {
      if (*seed_opt) train_args.seed = seed_value;
      if (*size_opt) train_args.size = size_value;
      if (*format_opt) train_args.format = format_value;
      return cmd_train(train_args, io);
    }
    if (*embed_cmd) return cmd_embed(embed_args, io);
    if (*reveal_cmd) return cmd_reveal(reveal_args, io);
    if (*nembed_cmd) return cmd_embed(nembed_args, io);
    if (*nreveal_cmd) return cmd_reveal(nreveal_args, io);
    if (*info_cmd) return cmd_info(info_duration, info_format, info_size, io);
    if (*eval_cmd) return cmd_eval(eval_args, io);
    if (*split_cmd) return cmd_split(split_ckpts, split_dir, io);
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace imgvox::cli
