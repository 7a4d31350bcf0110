// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

// Depth-2 nesting with access control: a holder of layer 1 alone decodes the
// outer clip; asking for level 2 without layer 2 is refused.

#include <cstdio>

#include "imgvox/imgvox.hpp"

using namespace imgvox;

int main() {
  const int size = 64;
  const packer::PackOptions po{packer::SecretFormat::mel, {size, size}, 0.0, 0.0,
                               packer::channels_for(1.0, packer::SecretFormat::mel, {size, size})};
  nested::NestedStack<float> full(2, po.channels);
  full.init_weights(3);

  const auto image = data::synthetic::face_like(size, 9);
  const std::vector<Tensor<float>> clips = {
      packer::pack_audio(data::synthetic::speech_like(1.0, 1), po).tensor.cast<float>(),
      packer::pack_audio(data::synthetic::speech_like(1.0, 2), po).tensor.cast<float>()};
  const auto enc = nested::nested_encode(full, image, clips);

  const auto exact = nested::nested_decode_exact(full, enc.container, enc.latents);
  std::printf("exact decode: image err %.3g, clip1 err %.3g, clip2 err %.3g\n",
              static_cast<double>(max_abs_diff(exact.image, image)),
              static_cast<double>(max_abs_diff(exact.audio[0], clips[0])),
              static_cast<double>(max_abs_diff(exact.audio[1], clips[1])));

  nested::NestedStack<float> outer = full;
  outer.drop_layer(2);
  outer.set_access_observer([](int k) { std::printf("  read layer %d\n", k); });
  std::printf("level 1 with layer 1 only:\n");
  const auto lvl1 = nested::nested_decode(outer, enc.container, 1);
  std::printf("  got %zu clip tensor(s)\n", lvl1.size());
  std::printf("level 2 with layer 1 only:\n");
  try {
    nested::nested_decode(outer, enc.container, 2);
  } catch (const PermissionError& e) {
    std::printf("  refused: %s\n", e.what());
  }
  return 0;
}
