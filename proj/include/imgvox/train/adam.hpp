// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "imgvox/core/error.hpp"

namespace imgvox::train {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

// Adam with per-parameter moments keyed by parameter name. Moments are kept
// in double regardless of the parameter type.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  long long steps() const { return step_; }

  // Call once per optimizer step, before the per-parameter updates.
  void begin_step() { ++step_; }

  template <typename T>
  void update(const std::string& name, std::span<T> param, std::span<const T> grad) {
    if (param.size() != grad.size()) throw TrainingError("adam: size mismatch for " + name);
    if (step_ == 0) throw TrainingError("adam: update before begin_step");
    auto& st = state_[name];
    if (st.m.empty()) {
      st.m.assign(param.size(), 0.0);
      st.v.assign(param.size(), 0.0);
    }
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad[i];
      st.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
      st.v[i] = b2 * st.v[i] + (1.0 - b2) * g * g;
      const double mhat = st.m[i] / c1;
      const double vhat = st.v[i] / c2;
      param[i] = static_cast<T>(param[i] - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  AdamConfig cfg_;
  long long step_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace imgvox::train
