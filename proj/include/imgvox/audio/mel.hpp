// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>

#include "imgvox/audio/griffin_lim.hpp"
#include "imgvox/audio/stft.hpp"
#include "imgvox/audio/waveform.hpp"
#include "imgvox/core/error.hpp"

namespace imgvox::audio {

struct MelConfig {
  StftConfig stft{};
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double floor_db = -80.0;
  int nnls_iterations = 200;
  GriffinLimConfig griffin_lim{};
};

// Log-mel features normalized to [0, 1]; column t is frame t.
struct MelSpectrogram {
  Eigen::MatrixXf values;
  float floor_db = -80.0f;
  double reference = 1.0;       // mel magnitude that maps to 0 dB (value 1)
  std::size_t source_len = 0;   // waveform samples

  Eigen::Index bins() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }

  friend bool operator==(const MelSpectrogram& a, const MelSpectrogram& b) {
    return a.floor_db == b.floor_db && a.reference == b.reference && a.source_len == b.source_len &&
           a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() &&
           a.values == b.values;
  }
};

// Slaney-style mel scale: linear below 1 kHz, logarithmic above.
inline double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

inline double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

// Mel band edges in Hz: n_mels + 2 points equally spaced on the mel scale.
inline std::vector<double> mel_band_edges(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (cfg.n_mels + 1));
  }
  return edges;
}

// n_mels x bins triangular filters, each scaled to unit area in Hz.
inline Eigen::MatrixXd mel_filterbank(const MelConfig& cfg) {
  const int bins = cfg.stft.bins();
  const auto edges = mel_band_edges(cfg);
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m];
    const double mid = edges[m + 1];
    const double hi = edges[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / cfg.stft.n_fft;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb(m, k) = std::max(0.0, std::min(rise, fall)) * enorm;
    }
  }
  return fb;
}

// Frames kept after compression: ceil(n / hop). The centered STFT yields one
// more frame when n is a multiple of hop; that trailing frame is dropped.
inline std::size_t content_frames(std::size_t n, const StftConfig& cfg = {}) {
  return (n + cfg.hop - 1) / cfg.hop;
}

inline double normalize_db(double db, double floor_db) {
  return (std::clamp(db, floor_db, 0.0) - floor_db) / -floor_db;
}

inline double unnormalize_db(double v, double floor_db) { return floor_db + v * -floor_db; }

// Mel compression and its Griffin-Lim inverse.
class MelCodec {
 public:
  explicit MelCodec(double reference = 0.0, MelConfig cfg = {})
      : cfg_(cfg), fb_(mel_filterbank(cfg)) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fb_);
    pinv_ = cod.pseudoInverse();
    fb_sparse_ = fb_.sparseView();
    reference_ = reference > 0.0 ? reference : full_scale_reference();
  }

  const MelConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& filterbank() const { return fb_; }
  double reference() const { return reference_; }

  // Upper bound on any mel magnitude of a [-1, 1] signal: sum(window) times the
  // largest filter row sum. Used when no corpus reference is supplied.
  double full_scale_reference() const {
    double wsum = 0.0;
    for (double w : hann_window(cfg_.stft)) wsum += w;
    return wsum * fb_.rowwise().sum().maxCoeff();
  }

  // Linear mel magnitudes for every STFT frame (n_mels x (1 + n / hop)).
  Eigen::MatrixXd mel_magnitudes(const Waveform& wave) const {
    const StftSpec spec = stft(wave, cfg_.stft);
    return fb_ * spec.bins.cwiseAbs();
  }

  MelSpectrogram compress(const Waveform& wave) const {
    const Eigen::MatrixXd mags = mel_magnitudes(wave);
    const Eigen::Index keep = static_cast<Eigen::Index>(content_frames(wave.size(), cfg_.stft));
    MelSpectrogram mel;
    mel.floor_db = static_cast<float>(cfg_.floor_db);
    mel.reference = reference_;
    mel.source_len = wave.size();
    mel.values.resize(cfg_.n_mels, keep);
    for (Eigen::Index t = 0; t < keep; ++t) {
      for (Eigen::Index m = 0; m < cfg_.n_mels; ++m) {
        const double mag = mags(m, t);
        const double db = mag > 0.0 ? 20.0 * std::log10(mag / reference_) : cfg_.floor_db;
        mel.values(m, t) = static_cast<float>(normalize_db(db, cfg_.floor_db));
      }
    }
    return mel;
  }

  // Estimated linear magnitude (bins x STFT frames of source_len). Values at
  // the floor decode to zero energy. The mel-to-linear lift is a
  // non-negative least-squares fit, solved with multiplicative updates
  // started from the clamped pseudo-inverse.
  Eigen::MatrixXd linear_magnitude(const MelSpectrogram& mel) const {
    validate(mel);
    const Eigen::Index frames = static_cast<Eigen::Index>(stft_frames(mel.source_len, cfg_.stft));
    Eigen::MatrixXd mags = Eigen::MatrixXd::Zero(cfg_.n_mels, frames);
    for (Eigen::Index t = 0; t < mel.frames(); ++t) {
      for (Eigen::Index m = 0; m < cfg_.n_mels; ++m) {
        const double v = mel.values(m, t);
        if (v <= 0.0) continue;
        mags(m, t) = mel.reference * std::pow(10.0, unnormalize_db(v, mel.floor_db) / 20.0);
      }
    }
    return nnls_lift(mags);
  }

  Eigen::MatrixXd nnls_lift(const Eigen::MatrixXd& mags) const {
    Eigen::MatrixXd x = (pinv_ * mags).cwiseMax(1e-12);
    const Eigen::MatrixXd target = fb_sparse_.transpose() * mags;
    for (int it = 0; it < cfg_.nnls_iterations; ++it) {
      const Eigen::MatrixXd fx = fb_sparse_ * x;
      const Eigen::MatrixXd denom = fb_sparse_.transpose() * fx;
      x = x.cwiseProduct(target.cwiseQuotient(denom.cwiseMax(1e-30)));
    }
    // Columns with no mel energy stay exactly silent.
    for (Eigen::Index t = 0; t < mags.cols(); ++t) {
      if (mags.col(t).maxCoeff() <= 0.0) x.col(t).setZero();
    }
    return x;
  }

  Waveform decompress(const MelSpectrogram& mel, std::vector<double>* convergence = nullptr) const {
    const Eigen::MatrixXd linear = linear_magnitude(mel);
    return Waveform(griffin_lim(linear, cfg_.stft, mel.source_len, cfg_.griffin_lim, convergence));
  }

  void validate(const MelSpectrogram& mel) const {
    if (mel.bins() != cfg_.n_mels) {
      throw InputError("mel has " + std::to_string(mel.bins()) + " bins, codec expects " +
                       std::to_string(cfg_.n_mels));
    }
    if (mel.source_len == 0) throw InputError("mel spectrogram has zero source length");
    if (static_cast<std::size_t>(mel.frames()) != content_frames(mel.source_len, cfg_.stft)) {
      throw InputError("mel frame count " + std::to_string(mel.frames()) +
                       " inconsistent with source length " + std::to_string(mel.source_len));
    }
    if (!(mel.reference > 0.0)) throw InputError("mel reference must be positive");
  }

 private:
  MelConfig cfg_;
  Eigen::MatrixXd fb_;
  Eigen::MatrixXd pinv_;
  Eigen::SparseMatrix<double> fb_sparse_;
  double reference_ = 1.0;
};

// Largest mel magnitude in the clip; the corpus maximum becomes the 0 dB
// reference stored with a checkpoint.
// Full-scale reference of the default configuration, computed once.
inline double default_mel_reference() {
  static const double ref = MelCodec().reference();
  return ref;
}

inline double peak_mel_magnitude(const Waveform& wave, const MelConfig& cfg = {}) {
  if (wave.empty()) return 0.0;
  MelCodec codec(1.0, cfg);
  return codec.mel_magnitudes(wave).maxCoeff();
}

inline MelSpectrogram mel_compress(const Waveform& wave, double reference = 0.0) {
  return MelCodec(reference).compress(wave);
}

inline Waveform mel_decompress(const MelSpectrogram& mel) {
  return MelCodec(mel.reference).decompress(mel);
}

}  // namespace imgvox::audio
