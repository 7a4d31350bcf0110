// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "imgvox/audio/wav_io.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"
#include "imgvox/data/image_io.hpp"
#include "imgvox/packer/codec.hpp"

namespace imgvox::data {

namespace fs = std::filesystem;

struct AudioEntry {
  fs::path path;
  std::size_t samples = 0;  // at 16 kHz

  double duration_s() const { return static_cast<double>(samples) / audio::kSampleRate; }
  friend bool operator==(const AudioEntry&, const AudioEntry&) = default;
};

enum class Split { train, test };

struct CorpusIndex {
  std::vector<fs::path> train_images;
  std::vector<fs::path> test_images;
  std::vector<AudioEntry> train_audio;
  std::vector<AudioEntry> test_audio;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;
  std::vector<std::string> warnings;  // files skipped during the scan

  const std::vector<fs::path>& images(Split s) const { return s == Split::train ? train_images : test_images; }
  const std::vector<AudioEntry>& audio(Split s) const { return s == Split::train ? train_audio : test_audio; }
};

namespace detail {

inline std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

inline std::vector<fs::path> scan(const fs::path& dir, const std::vector<std::string>& exts) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (std::find(exts.begin(), exts.end(), lower_ext(e.path())) != exts.end()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Training count for n items: at least one each side when n >= 2.
inline std::size_t train_count(std::size_t n, double ratio) {
  if (n <= 1) return n;
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

template <typename V>
void shuffle_split(std::vector<V> items, std::uint64_t seed, double ratio, std::vector<V>& train,
                   std::vector<V>& test) {
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  const std::size_t k = train_count(items.size(), ratio);
  train.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k));
  test.assign(items.begin() + static_cast<std::ptrdiff_t>(k), items.end());
}

}  // namespace detail

// Recursively indexes PNG/JPEG images and WAV clips. Undecodable files are
// skipped with a warning; a directory with no usable file is an error.
inline CorpusIndex build_index(const fs::path& image_dir, const fs::path& audio_dir, double split_ratio,
                               std::uint64_t seed) {
  if (!(split_ratio > 0.0 && split_ratio <= 1.0)) throw InputError("split ratio must be in (0, 1]");
  CorpusIndex idx;
  idx.seed = seed;
  idx.split_ratio = split_ratio;

  std::vector<fs::path> images;
  for (const auto& p : detail::scan(image_dir, {".png", ".jpg", ".jpeg"})) {
    try {
      read_image(p);
      images.push_back(p);
    } catch (const Error& e) {
      idx.warnings.push_back("skipping image " + p.string() + ": " + e.what());
    }
  }
  std::vector<AudioEntry> clips;
  for (const auto& p : detail::scan(audio_dir, {".wav"})) {
    try {
      const auto w = audio::read_wav(p);
      if (w.empty()) throw IoError("no samples");
      clips.push_back({p, w.size()});
    } catch (const Error& e) {
      idx.warnings.push_back("skipping audio " + p.string() + ": " + e.what());
    }
  }
  if (images.empty()) throw InputError("no usable images under " + image_dir.string());
  if (clips.empty()) throw InputError("no usable audio under " + audio_dir.string());
  detail::shuffle_split(std::move(images), seed, split_ratio, idx.train_images, idx.test_images);
  detail::shuffle_split(std::move(clips), seed ^ 0x9E3779B97F4A7C15ULL, split_ratio, idx.train_audio,
                        idx.test_audio);
  return idx;
}

// Deterministic generator for (epoch, position) draws under a run seed.
inline std::mt19937_64 pair_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t position) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(position)};
  return std::mt19937_64(seq);
}

inline double draw_duration(std::mt19937_64& rng, double min_s, double max_s) {
  std::uniform_real_distribution<double> d(min_s, max_s);
  return min_s == max_s ? max_s : d(rng);
}

struct PairOptions {
  double min_s = 0.0;
  double max_s = 10.0;
  int image_size = 160;
  packer::PackOptions pack{};  // channels should be the range's maximum
};

struct Pair {
  Tensor<float> image;
  packer::PackedSecret secret;
  audio::Waveform clip;  // the cropped or padded clip that was packed
  double duration_s = 0.0;
};

// Packs `clip` fitted to `duration_s` next to the resized image.
inline Pair pack_pair(const Tensor<float>& image, const audio::Waveform& clip, double duration_s,
                      const PairOptions& opt) {
  Pair p;
  p.image = resize_bilinear(image, opt.image_size, opt.image_size);
  p.duration_s = duration_s;
  p.clip = audio::fit_length(clip, audio::samples_for_duration(duration_s));
  p.secret = packer::pack_audio(p.clip, opt.pack);
  return p;
}

// Pair for `item` of a split: image item, clip item (both modulo their
// counts), duration drawn uniformly from the range using (seed, epoch, item).
inline Pair make_pair(const CorpusIndex& idx, Split split, std::size_t item, std::uint64_t epoch,
                      const PairOptions& opt) {
  const auto& images = idx.images(split);
  const auto& clips = idx.audio(split);
  if (images.empty() || clips.empty()) throw InputError("split has no items");
  auto rng = pair_rng(idx.seed, epoch, item);
  const double d = draw_duration(rng, opt.min_s, opt.max_s);
  const auto image = read_image(images[item % images.size()]).pixels;
  const auto clip = audio::read_wav(clips[item % clips.size()].path);
  return pack_pair(image, clip, d, opt);
}

// Concatenates clips in order until the target length, then crops.
inline audio::Waveform splice_clips(const std::vector<audio::Waveform>& clips, double target_s) {
  const std::size_t target = audio::samples_for_duration(target_s);
  if (target == 0) throw InputError("splice target must be positive");
  std::vector<float> out;
  out.reserve(target);
  for (const auto& c : clips) {
    if (out.size() >= target) break;
    out.insert(out.end(), c.samples().begin(), c.samples().end());
  }
  if (out.size() < target) {
    throw InputError("not enough audio to splice " + std::to_string(target_s) + " s (have " +
                     std::to_string(static_cast<double>(out.size()) / audio::kSampleRate) + " s)");
  }
  out.resize(target);
  return audio::Waveform(std::move(out));
}

inline audio::Waveform splice_clips(const CorpusIndex& idx, Split split, double target_s) {
  std::vector<audio::Waveform> clips;
  std::size_t have = 0;
  const std::size_t target = audio::samples_for_duration(target_s);
  for (const auto& e : idx.audio(split)) {
    if (have >= target) break;
    clips.push_back(audio::read_wav(e.path));
    have += clips.back().size();
  }
  return splice_clips(clips, target_s);
}

}  // namespace imgvox::data
