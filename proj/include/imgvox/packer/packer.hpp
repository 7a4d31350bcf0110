// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "imgvox/audio/mel.hpp"
#include "imgvox/audio/stft.hpp"
#include "imgvox/audio/waveform.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"

namespace imgvox::packer {

enum class SecretFormat { mel, raw, stft };

inline std::string to_string(SecretFormat f) {
  switch (f) {
    case SecretFormat::mel: return "mel";
    case SecretFormat::raw: return "raw";
    case SecretFormat::stft: return "stft";
  }
  return "?";
}

inline SecretFormat parse_format(const std::string& s) {
  if (s == "mel") return SecretFormat::mel;
  if (s == "raw") return SecretFormat::raw;
  if (s == "stft") return SecretFormat::stft;
  throw InputError("unknown secret format '" + s + "' (expected mel, raw or stft)");
}

// Spatial size of one packed plane. Matches the cover image.
struct Geometry {
  int height = 160;
  int width = 160;

  std::size_t cells() const { return static_cast<std::size_t>(height) * width; }
  friend bool operator==(const Geometry&, const Geometry&) = default;
};

inline constexpr int kMelBins = 80;

// STFT-format framing: 1024-point Hann frames every 1600 samples, no
// centering, Nyquist bin dropped. 10 s of audio becomes 100 frames of 512
// complex values, i.e. exactly four 160x160 planes.
inline audio::StftConfig stft_format_config() {
  audio::StftConfig cfg;
  cfg.n_fft = 1024;
  cfg.win_length = 1024;
  cfg.hop = 1600;
  cfg.center = false;
  return cfg;
}
inline constexpr int kStftKeptBins = 512;

inline std::size_t stft_format_frames(std::size_t n) {
  const auto cfg = stft_format_config();
  return (n + cfg.hop - 1) / cfg.hop;
}

// |X_k| <= sum(window) for any signal in [-1, 1], so this scale never clips.
inline double stft_full_scale() {
  double s = 0.0;
  for (double w : audio::hann_window(stft_format_config())) s += w;
  return s;
}

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

inline int stft_frames_per_channel(const Geometry& g) {
  const int fpc = static_cast<int>(g.cells() / (2 * kStftKeptBins));
  if (fpc <= 0) throw InputError("plane too small for stft packing (needs >= 1024 cells)");
  return fpc;
}

// Channel count needed for n samples in the given format.
inline int channels_for_samples(std::size_t n, SecretFormat format, const Geometry& g = {}) {
  switch (format) {
    case SecretFormat::mel:
      return static_cast<int>(ceil_div(audio::content_frames(n) * kMelBins, g.cells()));
    case SecretFormat::raw:
      return static_cast<int>(ceil_div(n, g.cells()));
    case SecretFormat::stft:
      return static_cast<int>(ceil_div(stft_format_frames(n), stft_frames_per_channel(g)));
  }
  return 0;
}

inline int channels_for(double duration_s, SecretFormat format, const Geometry& g = {}) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw InputError("duration must be positive, got " + std::to_string(duration_s));
  }
  return channels_for_samples(audio::samples_for_duration(duration_s), format, g);
}

// Everything needed to turn a packed tensor back into its source.
struct PackedMeta {
  SecretFormat format = SecretFormat::mel;
  std::size_t source_len = 0;  // samples
  std::size_t frames = 0;      // mel or stft frames; samples for raw
  double reference = 1.0;      // mel 0 dB reference
  float floor_db = -80.0f;
  double stft_scale = 1.0;

  friend bool operator==(const PackedMeta&, const PackedMeta&) = default;
};

// Image-shaped secret: channels x height x width, all values in [0, 1].
struct PackedSecret {
  Tensor<double> tensor;
  std::size_t pad_cells = 0;
  PackedMeta meta;

  SecretFormat format() const { return meta.format; }
  int channels() const { return tensor.channels(); }
  Geometry geometry() const { return {tensor.height(), tensor.width()}; }
};

// Value that encodes silence in each format; also used for padding.
inline double silence_value(SecretFormat f) { return f == SecretFormat::mel ? 0.0 : 0.5; }

namespace detail {

struct Cell {
  int channel;
  int row;
  int col;
};

inline Cell linear_cell(std::size_t index, const Geometry& g) {
  const std::size_t plane = g.cells();
  const std::size_t within = index % plane;
  return {static_cast<int>(index / plane), static_cast<int>(within / g.width),
          static_cast<int>(within % g.width)};
}

// Mel cell for (frame, bin). With heights that are multiples of 80 each plane
// holds height/80 horizontal stripes of `width` frames, bin = row within the
// stripe and frame order = column. Otherwise frames are laid out linearly,
// 80 consecutive cells per frame.
inline Cell mel_cell(std::size_t frame, int bin, const Geometry& g) {
  if (g.height % kMelBins == 0) {
    const std::size_t stripes = static_cast<std::size_t>(g.height / kMelBins);
    const std::size_t per_channel = stripes * g.width;
    const std::size_t local = frame % per_channel;
    return {static_cast<int>(frame / per_channel),
            static_cast<int>((local / g.width) * kMelBins + bin), static_cast<int>(local % g.width)};
  }
  return linear_cell(frame * kMelBins + bin, g);
}

// STFT cell for (frame, bin, imaginary?). Each channel holds a group of
// frames: the real parts fill its first half, the imaginary parts the second.
inline Cell stft_cell(std::size_t frame, int bin, bool imag, const Geometry& g) {
  const std::size_t fpc = static_cast<std::size_t>(stft_frames_per_channel(g));
  const std::size_t local = frame % fpc;
  const std::size_t within = (imag ? fpc * kStftKeptBins : 0) + local * kStftKeptBins + bin;
  return {static_cast<int>(frame / fpc), static_cast<int>(within / g.width),
          static_cast<int>(within % g.width)};
}

inline PackedSecret blank(SecretFormat f, int channels, std::size_t used, const Geometry& g) {
  PackedSecret p;
  p.tensor = Tensor<double>(channels, g.height, g.width, silence_value(f));
  p.pad_cells = static_cast<std::size_t>(channels) * g.cells() - used;
  p.meta.format = f;
  return p;
}

inline void require_format(const PackedSecret& p, SecretFormat f) {
  if (p.meta.format != f) {
    throw InputError("packed secret holds " + to_string(p.meta.format) + ", expected " + to_string(f));
  }
}

inline double read01(const Tensor<double>& t, const Cell& c) {
  return std::clamp(t(c.channel, c.row, c.col), 0.0, 1.0);
}

}  // namespace detail

inline PackedSecret pack_mel(const audio::MelSpectrogram& mel, const Geometry& g = {}) {
  if (mel.bins() != kMelBins) throw InputError("pack_mel expects 80 mel bins");
  const std::size_t frames = static_cast<std::size_t>(mel.frames());
  const int channels = std::max<int>(1, static_cast<int>(ceil_div(frames * kMelBins, g.cells())));
  PackedSecret p = detail::blank(SecretFormat::mel, channels, frames * kMelBins, g);
  for (std::size_t f = 0; f < frames; ++f) {
    for (int b = 0; b < kMelBins; ++b) {
      const auto c = detail::mel_cell(f, b, g);
      p.tensor(c.channel, c.row, c.col) = mel.values(b, static_cast<Eigen::Index>(f));
    }
  }
  p.meta.source_len = mel.source_len;
  p.meta.frames = frames;
  p.meta.reference = mel.reference;
  p.meta.floor_db = mel.floor_db;
  return p;
}

inline audio::MelSpectrogram unpack_mel(const PackedSecret& p) {
  detail::require_format(p, SecretFormat::mel);
  const Geometry g = p.geometry();
  if (ceil_div(p.meta.frames * kMelBins, g.cells()) > static_cast<std::size_t>(p.channels())) {
    throw InputError("packed mel has too few channels for " + std::to_string(p.meta.frames) + " frames");
  }
  audio::MelSpectrogram mel;
  mel.values.resize(kMelBins, static_cast<Eigen::Index>(p.meta.frames));
  for (std::size_t f = 0; f < p.meta.frames; ++f) {
    for (int b = 0; b < kMelBins; ++b) {
      mel.values(b, static_cast<Eigen::Index>(f)) =
          static_cast<float>(detail::read01(p.tensor, detail::mel_cell(f, b, g)));
    }
  }
  mel.source_len = p.meta.source_len;
  mel.reference = p.meta.reference;
  mel.floor_db = p.meta.floor_db;
  return mel;
}

// Samples mapped [-1, 1] -> [0, 1] and laid out row-major across planes.
inline PackedSecret pack_raw(const audio::Waveform& wave, const Geometry& g = {}) {
  const std::size_t n = wave.size();
  const int channels = std::max(1, channels_for_samples(n, SecretFormat::raw, g));
  PackedSecret p = detail::blank(SecretFormat::raw, channels, n, g);
  const auto s = wave.samples();
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = detail::linear_cell(i, g);
    p.tensor(c.channel, c.row, c.col) = (static_cast<double>(s[i]) + 1.0) / 2.0;
  }
  p.meta.source_len = n;
  p.meta.frames = n;
  return p;
}

inline audio::Waveform unpack_raw(const PackedSecret& p) {
  detail::require_format(p, SecretFormat::raw);
  const Geometry g = p.geometry();
  if (ceil_div(p.meta.source_len, g.cells()) > static_cast<std::size_t>(p.channels())) {
    throw InputError("packed raw audio has too few channels");
  }
  std::vector<float> out(p.meta.source_len);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(detail::read01(p.tensor, detail::linear_cell(i, g)) * 2.0 - 1.0);
  }
  return audio::Waveform(std::move(out));
}

// Complex spectrum in STFT-format framing (513 x frames, Nyquist row zero).
inline audio::ComplexMatrix stft_format_spectrum(const audio::Waveform& wave) {
  const auto cfg = stft_format_config();
  const std::size_t frames = stft_format_frames(wave.size());
  // Zero-extend so the last partial hop still yields a full frame.
  std::vector<float> padded(wave.samples().begin(), wave.samples().end());
  padded.resize((frames - 1) * cfg.hop + cfg.n_fft, 0.0f);
  audio::ComplexMatrix spec = audio::stft(std::span<const float>(padded), cfg).bins;
  spec.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(frames));
  spec.row(kStftKeptBins).setZero();
  return spec;
}

inline PackedSecret pack_stft(const audio::Waveform& wave, const Geometry& g = {},
                              double scale = 0.0) {
  if (wave.empty()) throw InputError("pack_stft of an empty waveform");
  if (scale <= 0.0) scale = stft_full_scale();
  const audio::ComplexMatrix spec = stft_format_spectrum(wave);
  const std::size_t frames = static_cast<std::size_t>(spec.cols());
  const int channels = channels_for_samples(wave.size(), SecretFormat::stft, g);
  PackedSecret p = detail::blank(SecretFormat::stft, channels, frames * 2 * kStftKeptBins, g);
  auto put = [&](const detail::Cell& c, double v) {
    p.tensor(c.channel, c.row, c.col) = std::clamp(0.5 + v / (2.0 * scale), 0.0, 1.0);
  };
  for (std::size_t f = 0; f < frames; ++f) {
    for (int b = 0; b < kStftKeptBins; ++b) {
      const auto z = spec(b, static_cast<Eigen::Index>(f));
      put(detail::stft_cell(f, b, false, g), z.real());
      put(detail::stft_cell(f, b, true, g), z.imag());
    }
  }
  p.meta.source_len = wave.size();
  p.meta.frames = frames;
  p.meta.stft_scale = scale;
  return p;
}

// Recovers the 513 x frames spectrum (Nyquist row zero).
inline audio::ComplexMatrix unpack_stft(const PackedSecret& p) {
  detail::require_format(p, SecretFormat::stft);
  const Geometry g = p.geometry();
  if (ceil_div(p.meta.frames, static_cast<std::size_t>(stft_frames_per_channel(g))) >
      static_cast<std::size_t>(p.channels())) {
    throw InputError("packed stft has too few channels");
  }
  const double scale = p.meta.stft_scale;
  audio::ComplexMatrix spec =
      audio::ComplexMatrix::Zero(kStftKeptBins + 1, static_cast<Eigen::Index>(p.meta.frames));
  for (std::size_t f = 0; f < p.meta.frames; ++f) {
    for (int b = 0; b < kStftKeptBins; ++b) {
      const double re = (detail::read01(p.tensor, detail::stft_cell(f, b, false, g)) - 0.5) * 2.0 * scale;
      const double im = (detail::read01(p.tensor, detail::stft_cell(f, b, true, g)) - 0.5) * 2.0 * scale;
      spec(b, static_cast<Eigen::Index>(f)) = {re, im};
    }
  }
  return spec;
}

// Inverse STFT for the STFT format. The hop exceeds the window, so samples in
// the gaps between frames are not represented and come back as zero.
inline audio::Waveform stft_format_waveform(const audio::ComplexMatrix& spec, std::size_t length) {
  return audio::Waveform(audio::istft(spec, stft_format_config(), length, 1e-3));
}

// Samples whose value is recoverable from an STFT-format spectrum.
inline std::vector<bool> stft_format_coverage(std::size_t length) {
  const auto cfg = stft_format_config();
  const auto w = audio::hann_window(cfg);
  std::vector<bool> covered(length, false);
  const std::size_t frames = stft_format_frames(length);
  for (std::size_t f = 0; f < frames; ++f) {
    for (int i = 0; i < cfg.n_fft; ++i) {
      const std::size_t j = f * cfg.hop + i;
      if (j < length && w[i] * w[i] > 1e-3) covered[j] = true;
    }
  }
  return covered;
}

// Re-pads a packed secret to `channels` planes with silence, so mixed-length
// clips share one tensor shape.
inline PackedSecret extend_channels(PackedSecret p, int channels) {
  if (channels < p.channels()) {
    throw InputError("cannot shrink packed secret from " + std::to_string(p.channels()) + " to " +
                     std::to_string(channels) + " channels");
  }
  if (channels == p.channels()) return p;
  Tensor<double> t(channels, p.tensor.height(), p.tensor.width(), silence_value(p.meta.format));
  std::copy(p.tensor.values().begin(), p.tensor.values().end(), t.values().begin());
  p.pad_cells += static_cast<std::size_t>(channels - p.channels()) * p.geometry().cells();
  p.tensor = std::move(t);
  return p;
}

// Replaces the tensor (e.g. with a revealed estimate), keeping metadata.
inline PackedSecret with_tensor(const PackedSecret& like, Tensor<double> t) {
  require_shape(t.shape(), like.tensor.shape(), "revealed secret");
  PackedSecret p = like;
  p.tensor = std::move(t);
  return p;
}

}  // namespace imgvox::packer
