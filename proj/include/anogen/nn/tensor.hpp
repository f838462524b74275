#pragma once

#include <Eigen/Core>

#include "anogen/common.hpp"

namespace anogen::nn {

// Batched NCHW tensor. Storage is a single row-major matrix of shape
// (n*c, h*w): row (i*c + ch) holds channel ch of sample i, so per-channel
// views and im2col stay cheap Eigen blocks.
template <typename S>
struct BasicTensor {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int n = 0, c = 0, h = 0, w = 0;
  Matrix data;

  BasicTensor() = default;
  BasicTensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), data(Matrix::Zero(n_ * c_, h_ * w_)) {}

  static BasicTensor zeros_like(const BasicTensor& other) {
    return BasicTensor(other.n, other.c, other.h, other.w);
  }

  bool same_shape(const BasicTensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  std::ptrdiff_t size() const { return data.size(); }

  auto channel(int sample, int ch) { return data.row(sample * c + ch); }
  auto channel(int sample, int ch) const { return data.row(sample * c + ch); }

  // All channels of one sample as a (c, h*w) block.
  auto sample(int i) { return data.middleRows(i * c, c); }
  auto sample(int i) const { return data.middleRows(i * c, c); }

  S scalar() const {
    if (data.size() != 1) throw DimensionError("tensor is not a scalar");
    return data(0, 0);
  }
};

using Tensor = BasicTensor<Scalar>;

}  // namespace anogen::nn
