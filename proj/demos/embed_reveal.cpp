// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

// Hides a synthetic speech clip in a synthetic face, then recovers it two
// ways: with the true latent (exact) and with the deployed zero seed.
// A few training steps are run first so the deployed path carries signal.
//
//   demo_embed_reveal [steps] [out_dir]

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "imgvox/imgvox.hpp"

using namespace imgvox;

int main(int argc, char** argv) {
  const int steps = argc > 1 ? std::atoi(argv[1]) : 20;
  const std::filesystem::path out = argc > 2 ? argv[2] : "demo_out";
  std::filesystem::create_directories(out);

  const int size = 64;
  const packer::PackOptions po{packer::SecretFormat::mel, {size, size}, 0.0, 0.0,
                               packer::channels_for(2.0, packer::SecretFormat::mel, {size, size})};
  std::vector<train::TrainSample<float>> batch;
  for (int i = 0; i < 4; ++i) {
    batch.push_back({data::synthetic::face_like(size, i),
                     packer::pack_audio(data::synthetic::speech_like(2.0, 100 + i), po).tensor.cast<float>()});
  }

  inn::INNStack<float> stack(inn::StackSpec{3, po.channels, 32, 8});
  stack.init_weights(1);
  train::Adam adam(train::AdamConfig{1e-3});
  for (int s = 0; s < steps; ++s) {
    const auto r = train::train_step(stack, adam, batch);
    std::printf("step %3d  loss %.5f\n", s + 1, r.total);
  }

  const auto clip = data::synthetic::speech_like(2.0, 100);
  const auto packed = packer::pack_audio(clip, po);
  const auto cover = batch.front().cover;
  const auto e = stack.forward_embed(cover, packed.tensor.cast<float>());
  const auto shipped = data::quantize_u8(e.container);
  data::write_png(out / "cover.png", cover);
  data::write_png(out / "container.png", shipped);

  const auto exact = stack.backward_reveal(e.container, e.latent);
  const auto deployed = stack.reveal_deployed(shipped);
  const auto exact_wave = packer::unpack_audio(packer::with_tensor(packed, exact.secret.cast<double>()));
  const auto deployed_wave = packer::unpack_audio(packer::with_tensor(packed, deployed.secret.cast<double>()));
  audio::write_wav(out / "original.wav", clip);
  audio::write_wav(out / "revealed_exact.wav", exact_wave);
  audio::write_wav(out / "revealed_deployed.wav", deployed_wave);

  std::printf("container PSNR %.2f dB, SSIM %.4f\n", metrics::psnr(shipped, cover), metrics::ssim(shipped, cover));
  std::printf("LSD exact latent %.3f dB, zero seed %.3f dB\n", metrics::lsd(clip, exact_wave),
              metrics::lsd(clip, deployed_wave));
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}
