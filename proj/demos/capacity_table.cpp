// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

// Channel count per clip length and format for 160x160 and 64x64 covers.

#include <cstdio>

#include "imgvox/packer/packer.hpp"

using namespace imgvox::packer;

int main() {
  const double durations[] = {1, 2, 4, 8, 10, 20, 40, 80};
  for (const Geometry g : {Geometry{160, 160}, Geometry{64, 64}}) {
    std::printf("%dx%d\n  %8s %5s %5s %5s\n", g.width, g.height, "seconds", "mel", "raw", "stft");
    for (double d : durations) {
      std::printf("  %8.0f %5d %5d %5d\n", d, channels_for(d, SecretFormat::mel, g),
                  channels_for(d, SecretFormat::raw, g), channels_for(d, SecretFormat::stft, g));
    }
  }
  return 0;
}
