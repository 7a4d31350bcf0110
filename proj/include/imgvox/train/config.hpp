// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "imgvox/core/error.hpp"
#include "imgvox/packer/packer.hpp"
#include "imgvox/train/adam.hpp"
#include "imgvox/train/loss.hpp"

namespace imgvox::train {

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 2e-4;
  int batch_size = 8;
  std::uint64_t seed = 0;
  int image_size = 160;
  double duration_min_s = 0.0;
  double duration_max_s = 10.0;
  packer::SecretFormat format = packer::SecretFormat::mel;
  bool quantize_container = false;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda_container = 32.0;
  double lambda_cover = 1.0;
  double lambda_secret = 32.0;
  int nested_depth = 1;
  int hidden_channels = 32;
  int blocks = 8;
  long long max_steps = 0;  // 0: run all epochs
  double split_ratio = 0.8;

  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
  LossWeights weights() const { return {lambda_container, lambda_cover, lambda_secret}; }
  packer::Geometry geometry() const { return {image_size, image_size}; }
  int secret_channels() const {
    return packer::channels_for(duration_max_s, format, geometry());
  }

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

inline long long to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return i;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

// "lo-hi", "lo,hi", "lo hi" or just "hi" (meaning 0-hi).
inline std::pair<double, double> to_range(const std::string& key, std::string v) {
  for (char& c : v) {
    if (c == ',' || c == ':') c = ' ';
  }
  // A '-' between two numbers separates them; a leading '-' is a sign.
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] == '-' && (std::isdigit(static_cast<unsigned char>(v[i - 1])) || v[i - 1] == '.')) v[i] = ' ';
  }
  std::istringstream in(v);
  std::vector<std::string> parts;
  for (std::string p; in >> p;) parts.push_back(p);
  if (parts.size() == 1) return {0.0, to_double(key, parts[0])};
  if (parts.size() == 2) return {to_double(key, parts[0]), to_double(key, parts[1])};
  throw ConfigError(key + ": expected a range like 0-10, got '" + v + "'");
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"epochs", [](TrainConfig& c, auto& k, auto& v) { c.epochs = static_cast<int>(to_int(k, v)); }},
      {"learning_rate", [](TrainConfig& c, auto& k, auto& v) { c.learning_rate = to_double(k, v); }},
      {"batch_size", [](TrainConfig& c, auto& k, auto& v) { c.batch_size = static_cast<int>(to_int(k, v)); }},
      {"seed", [](TrainConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"image_size", [](TrainConfig& c, auto& k, auto& v) { c.image_size = static_cast<int>(to_int(k, v)); }},
      {"duration_range_s",
       [](TrainConfig& c, auto& k, auto& v) { std::tie(c.duration_min_s, c.duration_max_s) = to_range(k, v); }},
      {"format",
       [](TrainConfig& c, auto& k, auto& v) {
         try {
           c.format = packer::parse_format(v);
         } catch (const InputError& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"quantize_container", [](TrainConfig& c, auto& k, auto& v) { c.quantize_container = to_bool(k, v); }},
      {"adam_beta1", [](TrainConfig& c, auto& k, auto& v) { c.adam_beta1 = to_double(k, v); }},
      {"adam_beta2", [](TrainConfig& c, auto& k, auto& v) { c.adam_beta2 = to_double(k, v); }},
      {"adam_eps", [](TrainConfig& c, auto& k, auto& v) { c.adam_eps = to_double(k, v); }},
      {"lambda_container", [](TrainConfig& c, auto& k, auto& v) { c.lambda_container = to_double(k, v); }},
      {"lambda_cover", [](TrainConfig& c, auto& k, auto& v) { c.lambda_cover = to_double(k, v); }},
      {"lambda_secret", [](TrainConfig& c, auto& k, auto& v) { c.lambda_secret = to_double(k, v); }},
      {"nested_depth", [](TrainConfig& c, auto& k, auto& v) { c.nested_depth = static_cast<int>(to_int(k, v)); }},
      {"hidden_channels",
       [](TrainConfig& c, auto& k, auto& v) { c.hidden_channels = static_cast<int>(to_int(k, v)); }},
      {"blocks", [](TrainConfig& c, auto& k, auto& v) { c.blocks = static_cast<int>(to_int(k, v)); }},
      {"max_steps", [](TrainConfig& c, auto& k, auto& v) { c.max_steps = to_int(k, v); }},
      {"split_ratio", [](TrainConfig& c, auto& k, auto& v) { c.split_ratio = to_double(k, v); }},
  };
  return table;
}

}  // namespace detail

// Keys a config file must set; every other key has a default.
inline const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys = {"epochs",     "learning_rate",    "batch_size", "seed",
                                                "image_size", "duration_range_s", "format"};
  return keys;
}

inline constexpr const char* kEnvPrefix = "IMGVOX_";

inline void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (image_size < 11) throw ConfigError("image_size must be at least 11");
  if (!(duration_max_s > 0.0) || duration_min_s < 0.0 || duration_min_s > duration_max_s) {
    throw ConfigError("duration_range_s must satisfy 0 <= min <= max and max > 0");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("adam parameters out of range");
  }
  try {
    weights().validate();
  } catch (const ConfigError&) {
    throw ConfigError("lambda_* weights must be non-negative");
  }
  if (nested_depth < 1 || nested_depth > 4) throw ConfigError("nested_depth must be in [1, 4]");
  if (hidden_channels <= 0 || blocks <= 0) throw ConfigError("hidden_channels and blocks must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (!(split_ratio > 0.0 && split_ratio <= 1.0)) throw ConfigError("split_ratio must be in (0, 1]");
  if (format == packer::SecretFormat::stft && image_size * image_size < 1024) {
    throw ConfigError("stft format needs image_size >= 32");
  }
}

// Parses `key = value` lines ('#' starts a comment). Unknown keys, repeated
// keys and missing required keys are errors. Environment variables named
// IMGVOX_<KEY> (upper case) override file values when `env` is true.
inline TrainConfig parse_config(const std::string& text, const std::string& origin = "config",
                                bool env = true) {
  TrainConfig cfg;
  std::map<std::string, std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!detail::setters().count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (seen.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": repeated key '" + key + "'");
    seen[key] = value;
  }
  if (env) {
    for (const auto& [key, fn] : detail::setters()) {
      std::string name = kEnvPrefix;
      for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (const char* v = std::getenv(name.c_str())) seen[key] = v;
    }
  }
  for (const auto& key : required_config_keys()) {
    if (!seen.count(key)) throw ConfigError(origin + ": missing required key '" + key + "'");
  }
  for (const auto& [key, value] : seen) detail::setters().at(key)(cfg, key, value);
  cfg.validate();
  return cfg;
}

inline TrainConfig load_config(const std::filesystem::path& path, bool env = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), env);
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"image_size", c.image_size},
          {"duration_range_s", {c.duration_min_s, c.duration_max_s}},
          {"format", packer::to_string(c.format)},
          {"quantize_container", c.quantize_container},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"lambda_container", c.lambda_container},
          {"lambda_cover", c.lambda_cover},
          {"lambda_secret", c.lambda_secret},
          {"nested_depth", c.nested_depth},
          {"hidden_channels", c.hidden_channels},
          {"blocks", c.blocks},
          {"max_steps", c.max_steps},
          {"split_ratio", c.split_ratio}};
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.image_size = j.at("image_size").get<int>();
    c.duration_min_s = j.at("duration_range_s").at(0).get<double>();
    c.duration_max_s = j.at("duration_range_s").at(1).get<double>();
    c.format = packer::parse_format(j.at("format").get<std::string>());
    c.quantize_container = j.at("quantize_container").get<bool>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.lambda_container = j.at("lambda_container").get<double>();
    c.lambda_cover = j.at("lambda_cover").get<double>();
    c.lambda_secret = j.at("lambda_secret").get<double>();
    c.nested_depth = j.at("nested_depth").get<int>();
    c.hidden_channels = j.at("hidden_channels").get<int>();
    c.blocks = j.at("blocks").get<int>();
    c.max_steps = j.at("max_steps").get<long long>();
    c.split_ratio = j.at("split_ratio").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config snapshot: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("config snapshot: ") + e.what());
  }
}

}  // namespace imgvox::train
