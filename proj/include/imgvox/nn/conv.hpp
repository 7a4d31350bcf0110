// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "imgvox/core/error.hpp"
#include "imgvox/core/tensor.hpp"

namespace imgvox::nn {

// 3x3 convolution, stride 1, zero padding 1. Spatial shape is preserved.
//
// Implemented as im2col followed by one GEMM, so the layer is
// out = W[out, in*9] * cols[in*9, H*W] + b. The same struct doubles as the
// gradient accumulator for itself: a zeroed Conv3x3 of equal shape receives
// dL/dW and dL/db in backward().
template <typename T>
struct Conv3x3 {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<T> weight;  // [out][in][3][3]
  std::vector<T> bias;    // [out]

  Conv3x3() = default;
  Conv3x3(int in, int out)
      : in_channels(in),
        out_channels(out),
        weight(static_cast<std::size_t>(in) * out * 9, T{0}),
        bias(static_cast<std::size_t>(out), T{0}) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    check_input(x);
    const int hw = x.height() * x.width();
    std::vector<T> cols = im2col(x);
    Tensor<T> y(out_channels, x.height(), x.width());
    Eigen::Map<const RowMat> w(weight.data(), out_channels, in_channels * 9);
    Eigen::Map<const RowMat> c(cols.data(), in_channels * 9, hw);
    Eigen::Map<RowMat> out(y.data(), out_channels, hw);
    out.noalias() = w * c;
    for (int o = 0; o < out_channels; ++o) out.row(o).array() += bias[o];
    return y;
  }

  // Given the forward input x and dL/dy, accumulates parameter gradients into
  // `grad` and returns dL/dx.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, Conv3x3& grad) const {
    check_input(x);
    require_shape(dy.shape(), Shape{out_channels, x.height(), x.width()}, "conv backward dy");
    const int hw = x.height() * x.width();
    std::vector<T> cols = im2col(x);
    Eigen::Map<const RowMat> w(weight.data(), out_channels, in_channels * 9);
    Eigen::Map<const RowMat> c(cols.data(), in_channels * 9, hw);
    Eigen::Map<const RowMat> g(dy.data(), out_channels, hw);
    Eigen::Map<RowMat> gw(grad.weight.data(), out_channels, in_channels * 9);
    gw.noalias() += g * c.transpose();
    // Plain loop: Eigen's vectorized sum peels by runtime alignment, which
    // would make the result depend on where the buffer landed.
    for (int o = 0; o < out_channels; ++o) {
      T acc{0};
      for (int i = 0; i < hw; ++i) acc += g(o, i);
      grad.bias[o] += acc;
    }

    std::vector<T> dcols(cols.size());
    Eigen::Map<RowMat> dc(dcols.data(), in_channels * 9, hw);
    dc.noalias() = w.transpose() * g;
    return col2im(dcols, x.height(), x.width());
  }

  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  friend bool operator==(const Conv3x3&, const Conv3x3&) = default;

 private:
  using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  void check_input(const Tensor<T>& x) const {
    if (x.channels() != in_channels) {
      throw InputError("conv expects " + std::to_string(in_channels) + " input channels, got " +
                       std::to_string(x.channels()));
    }
  }

  // Row (ci*9 + ky*3 + kx) holds the input plane ci shifted by (ky-1, kx-1).
  std::vector<T> im2col(const Tensor<T>& x) const {
    const int h = x.height();
    const int w = x.width();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<T> cols(static_cast<std::size_t>(in_channels) * 9 * hw, T{0});
    for (int ci = 0; ci < in_channels; ++ci) {
      const T* src = x.plane(ci).data();
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          T* dst = cols.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
          const int dy = ky - 1;
          const int dx = kx - 1;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
            const T* s = src + static_cast<std::size_t>(y + dy) * w + dx;
            T* d = dst + static_cast<std::size_t>(y) * w;
            for (int xx = x0; xx < x1; ++xx) d[xx] = s[xx];
          }
        }
      }
    }
    return cols;
  }

  Tensor<T> col2im(const std::vector<T>& dcols, int h, int w) const {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    Tensor<T> dx(in_channels, h, w);
    for (int ci = 0; ci < in_channels; ++ci) {
      T* dst = dx.plane(ci).data();
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const T* src = dcols.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
          const int dy = ky - 1;
          const int ddx = kx - 1;
          const int x0 = std::max(0, -ddx);
          const int x1 = std::min(w, w - ddx);
          for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
            const T* s = src + static_cast<std::size_t>(y) * w;
            T* d = dst + static_cast<std::size_t>(y + dy) * w + ddx;
            for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
          }
        }
      }
    }
    return dx;
  }
};

}  // namespace imgvox::nn
