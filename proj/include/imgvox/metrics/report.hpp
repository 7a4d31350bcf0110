// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "imgvox/audio/decompressor.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/data/corpus.hpp"
#include "imgvox/data/image_io.hpp"
#include "imgvox/metrics/quality.hpp"
#include "imgvox/packer/codec.hpp"
#include "imgvox/train/checkpoint.hpp"

namespace imgvox::metrics {

struct QualityRow {
  std::string range_s;  // e.g. "0-10"
  std::string format;
  int layer = 1;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double lsd_db = 0.0;
  std::size_t n_samples = 0;

  friend bool operator==(const QualityRow&, const QualityRow&) = default;
};

struct QualityReport {
  std::vector<QualityRow> rows;
  std::vector<std::string> notes;  // free-form annotations, not part of the CSV
};

inline constexpr const char* kCsvHeader = "range_s,format,layer,psnr_db,ssim,lsd_db,n_samples";

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string range_label(double min_s, double max_s) {
  return format_number(min_s) + "-" + format_number(max_s);
}

inline std::string to_csv(const QualityReport& r) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const auto& row : r.rows) {
    out << row.range_s << "," << row.format << "," << row.layer << "," << format_number(row.psnr_db) << ","
        << format_number(row.ssim) << "," << format_number(row.lsd_db) << "," << row.n_samples << "\n";
  }
  return out.str();
}

inline QualityReport parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InputError("report CSV has an unexpected header");
  QualityReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw InputError("report CSV row has " + std::to_string(f.size()) + " fields");
    try {
      r.rows.push_back({f[0], f[1], std::stoi(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]),
                        static_cast<std::size_t>(std::stoull(f[6]))});
    } catch (const std::logic_error&) {
      throw InputError("report CSV row is not numeric: " + line);
    }
  }
  return r;
}

// Aligned text rendering of the same values as the CSV.
inline std::string to_table(const QualityReport& r) {
  const std::vector<std::string> head = {"range_s", "format", "layer", "psnr_db", "ssim", "lsd_db", "n_samples"};
  std::vector<std::vector<std::string>> cells = {head};
  for (const auto& row : r.rows) {
    cells.push_back({row.range_s, row.format, std::to_string(row.layer), format_number(row.psnr_db),
                     format_number(row.ssim), format_number(row.lsd_db), std::to_string(row.n_samples)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::ostringstream out;
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out << "  ";
      out << std::string(width[i] - line[i].size(), ' ') << line[i];
    }
    out << "\n";
  }
  for (const auto& n : r.notes) out << "# " << n << "\n";
  return out.str();
}

struct EvalItem {
  Tensor<float> image;   // any size; resized to the checkpoint's image size
  audio::Waveform clip;  // cropped or padded to the drawn duration
};

struct SweepEntry {
  std::string label;  // empty: derived from the range
  double min_s = 0.0;
  double max_s = 0.0;
  const train::LoadedCheckpoint* checkpoint = nullptr;
};

struct SweepOptions {
  std::uint64_t seed = 0;
  bool quantize = true;  // measure the 8-bit container that would be exported
  std::string decompressor = audio::kDefaultDecompressor;
};

// Per-layer quality of embedding `items` with one checkpoint. Container
// PSNR/SSIM compare the (8-bit) container with the resized cover; LSD
// compares each revealed clip with the clip that was embedded, skipping
// clips shorter than one hop.
inline std::vector<QualityRow> evaluate_checkpoint(const train::LoadedCheckpoint& ck, double min_s, double max_s,
                                                   const std::vector<EvalItem>& items, const SweepOptions& opt,
                                                   const audio::DecompressorRegistry& registry = {}) {
  const auto& cfg = ck.meta.config;
  const int depth = ck.stack.depth();
  data::PairOptions po;
  po.min_s = min_s;
  po.max_s = max_s;
  po.image_size = cfg.image_size;
  po.pack = {cfg.format, cfg.geometry(), ck.meta.mel_reference, ck.meta.stft_scale, ck.meta.secret_channels};

  std::vector<QualityRow> rows(depth);
  std::vector<std::size_t> lsd_count(depth, 0);
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto rng = data::pair_rng(opt.seed, 0, i);
    // Level k carries clip i + k - 1 (mod n) so nested layers hide different audio.
    std::vector<data::Pair> pairs;
    std::vector<Tensor<float>> secrets;
    for (int k = 0; k < depth; ++k) {
      const double d = data::draw_duration(rng, min_s, max_s);
      pairs.push_back(data::pack_pair(items[i].image, items[(i + k) % items.size()].clip, d, po));
      secrets.push_back(pairs.back().secret.tensor.cast<float>());
    }
    const Tensor<float>& cover = pairs.front().image;
    const auto enc = nested::nested_encode(ck.stack, cover, secrets);
    Tensor<float> shipped = opt.quantize ? data::quantize_u8(enc.container) : enc.container;
    const auto dec = nested::nested_decode(ck.stack, shipped, depth);
    for (int k = 1; k <= depth; ++k) {
      QualityRow& row = rows[k - 1];
      const Tensor<float>& carrier_cover = k == 1 ? cover : secrets[k - 2];
      const Tensor<float>& carrier = k == 1 ? shipped : enc.carriers[k - 1];
      row.psnr_db += psnr(carrier, carrier_cover);
      row.ssim += ssim(carrier, carrier_cover);
      const auto& packed = pairs[k - 1].secret;
      if (packed.meta.source_len >= static_cast<std::size_t>(audio::StftConfig{}.hop)) {
        const auto revealed = packer::with_tensor(packed, dec[k - 1].secret.cast<double>());
        const auto wave = packer::unpack_audio(revealed, registry, opt.decompressor);
        row.lsd_db += lsd(pairs[k - 1].clip, wave);
        ++lsd_count[k - 1];
      }
    }
  }
  for (int k = 1; k <= depth; ++k) {
    QualityRow& row = rows[k - 1];
    const double n = static_cast<double>(std::max<std::size_t>(1, items.size()));
    row.range_s = range_label(min_s, max_s);
    row.format = packer::to_string(cfg.format);
    row.layer = k;
    row.psnr_db /= n;
    row.ssim /= n;
    row.lsd_db = lsd_count[k - 1] ? row.lsd_db / static_cast<double>(lsd_count[k - 1]) : 0.0;
    row.n_samples = items.size();
  }
  return rows;
}

// One set of rows per duration range, each from its own checkpoint.
inline QualityReport capacity_sweep(const std::vector<SweepEntry>& entries, const std::vector<EvalItem>& items,
                                    const SweepOptions& opt = {}, const audio::DecompressorRegistry& registry = {}) {
  QualityReport report;
  for (const auto& e : entries) {
    if (e.checkpoint == nullptr) {
      throw InputError("no checkpoint for range " + range_label(e.min_s, e.max_s));
    }
    auto rows = evaluate_checkpoint(*e.checkpoint, e.min_s, e.max_s, items, opt, registry);
    for (auto& r : rows) {
      if (!e.label.empty()) r.range_s = e.label;
      report.rows.push_back(std::move(r));
    }
  }
  return report;
}

}  // namespace imgvox::metrics
