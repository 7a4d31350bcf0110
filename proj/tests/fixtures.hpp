// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

// Shared helpers for the test binaries: synthetic corpora on disk and a
// subprocess runner for the command-line tool.
#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "imgvox/audio/wav_io.hpp"
#include "imgvox/data/image_io.hpp"
#include "imgvox/data/synthetic.hpp"

namespace imgvox::testing {

namespace fs = std::filesystem;

struct Corpus {
  fs::path images;
  fs::path audio;
};

// n face-like PNGs and n speech-like WAVs under root/{images,audio}.
inline Corpus write_corpus(const fs::path& root, int n, int image_size, double clip_s, std::uint64_t seed) {
  Corpus c{root / "images", root / "audio"};
  fs::create_directories(c.images);
  fs::create_directories(c.audio);
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%03d", i);
    data::write_png(c.images / (std::string(name) + ".png"), data::synthetic::face_like(image_size, seed + i));
    audio::write_wav(c.audio / (std::string(name) + ".wav"), data::synthetic::speech_like(clip_s, seed + 1000 + i));
  }
  return c;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  return out + "'";
}

struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr
};

// Runs the command-line tool with `args`; returns its exit code and output.
inline CliResult run_cli(const std::string& binary, const std::vector<std::string>& args) {
  std::string cmd = shell_quote(binary);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace imgvox::testing
