// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace imgvox {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: shapes, durations, formats, empty inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

// Missing or malformed configuration (config files, plugin names).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem and codec failures on external data (WAV, PNG, JPEG).
class IoError : public Error {
 public:
  using Error::Error;
};

// A pluggable decompressor failed while producing audio.
class DecompressionError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or similar divergence during optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// A decode asked for a nesting level whose layer weights are not held.
class PermissionError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class CorruptHeaderError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class TruncatedPayloadError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class UnsupportedVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace imgvox
