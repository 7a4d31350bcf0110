// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <string>

#include "imgvox/audio/decompressor.hpp"
#include "imgvox/audio/mel.hpp"
#include "imgvox/audio/waveform.hpp"
#include "imgvox/packer/packer.hpp"

namespace imgvox::packer {

struct PackOptions {
  SecretFormat format = SecretFormat::mel;
  Geometry geometry{};
  double mel_reference = 0.0;  // 0: full-scale reference
  double stft_scale = 0.0;     // 0: full-scale bound
  int channels = 0;            // pad to this many planes; 0: as needed
};

// Waveform -> packed tensor in any format. An empty clip packs to silence.
inline PackedSecret pack_audio(const audio::Waveform& wave, const PackOptions& opt) {
  PackedSecret p;
  if (wave.empty()) {
    const int c = std::max(1, opt.channels);
    p = detail::blank(opt.format, c, 0, opt.geometry);
    p.meta.reference = opt.mel_reference > 0.0 ? opt.mel_reference : audio::default_mel_reference();
    p.meta.stft_scale = opt.stft_scale > 0.0 ? opt.stft_scale : stft_full_scale();
    return p;
  }
  switch (opt.format) {
    case SecretFormat::mel:
      p = pack_mel(audio::MelCodec(opt.mel_reference).compress(wave), opt.geometry);
      break;
    case SecretFormat::raw:
      p = pack_raw(wave, opt.geometry);
      break;
    case SecretFormat::stft:
      p = pack_stft(wave, opt.geometry, opt.stft_scale);
      break;
  }
  if (opt.channels > 0) p = extend_channels(std::move(p), opt.channels);
  // Keep the unused scale fields identical to meta_for().
  if (opt.format != SecretFormat::mel) {
    p.meta.reference = opt.mel_reference > 0.0 ? opt.mel_reference : audio::default_mel_reference();
  }
  if (opt.format != SecretFormat::stft) p.meta.stft_scale = opt.stft_scale > 0.0 ? opt.stft_scale : stft_full_scale();
  return p;
}

// Metadata of a clip of `samples` samples packed with `opt`, for rebuilding
// a PackedSecret around a revealed tensor.
inline PackedMeta meta_for(std::size_t samples, const PackOptions& opt) {
  PackedMeta m;
  m.format = opt.format;
  m.source_len = samples;
  m.reference = opt.mel_reference > 0.0 ? opt.mel_reference : audio::default_mel_reference();
  m.stft_scale = opt.stft_scale > 0.0 ? opt.stft_scale : stft_full_scale();
  switch (opt.format) {
    case SecretFormat::mel: m.frames = audio::content_frames(samples); break;
    case SecretFormat::raw: m.frames = samples; break;
    case SecretFormat::stft: m.frames = stft_format_frames(samples); break;
  }
  return m;
}

// Packed tensor -> waveform. Mel goes through the named decompressor.
inline audio::Waveform unpack_audio(const PackedSecret& p, const audio::DecompressorRegistry& registry = {},
                                    const std::string& decompressor = audio::kDefaultDecompressor) {
  if (p.meta.source_len == 0) return audio::Waveform::silence(0);
  switch (p.meta.format) {
    case SecretFormat::mel:
      return registry.decompress(unpack_mel(p), decompressor);
    case SecretFormat::raw:
      return unpack_raw(p);
    case SecretFormat::stft:
      return stft_format_waveform(unpack_stft(p), p.meta.source_len);
  }
  return audio::Waveform::silence(0);
}

}  // namespace imgvox::packer
