// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

// Umbrella header.
#pragma once

#include "imgvox/audio/decompressor.hpp"
#include "imgvox/audio/griffin_lim.hpp"
#include "imgvox/audio/mel.hpp"
#include "imgvox/audio/resample.hpp"
#include "imgvox/audio/stft.hpp"
#include "imgvox/audio/wav_io.hpp"
#include "imgvox/audio/waveform.hpp"
#include "imgvox/core/atomic_file.hpp"
#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"
#include "imgvox/data/corpus.hpp"
#include "imgvox/data/image_io.hpp"
#include "imgvox/data/synthetic.hpp"
#include "imgvox/inn/coupling.hpp"
#include "imgvox/inn/es_gate.hpp"
#include "imgvox/inn/stack.hpp"
#include "imgvox/metrics/quality.hpp"
#include "imgvox/metrics/report.hpp"
#include "imgvox/nested/nested.hpp"
#include "imgvox/nn/conv.hpp"
#include "imgvox/nn/subnet.hpp"
#include "imgvox/packer/codec.hpp"
#include "imgvox/packer/packer.hpp"
#include "imgvox/train/adam.hpp"
#include "imgvox/train/checkpoint.hpp"
#include "imgvox/train/config.hpp"
#include "imgvox/train/loop.hpp"
#include "imgvox/train/loss.hpp"
#include "imgvox/train/trainer.hpp"
