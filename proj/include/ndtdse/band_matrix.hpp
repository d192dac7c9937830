// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <vector>

#include <Eigen/Dense>

namespace ndt {

/// Square matrix with entries only for |i - j| <= bandwidth. Row-major band
/// storage, (2 bw + 1) slots per row.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(int n, int bandwidth)
      : n_(n), bw_(bandwidth), data_(static_cast<std::size_t>(n) * (2 * bandwidth + 1), 0.0) {}

  int size() const { return n_; }
  int bandwidth() const { return bw_; }

  bool in_band(int i, int j) const { return i - j <= bw_ && j - i <= bw_; }

  double operator()(int i, int j) const {
    return in_band(i, j) ? data_[slot(i, j)] : 0.0;
  }
  double& at(int i, int j) {
    assert(in_band(i, j));
    return data_[slot(i, j)];
  }

  /// this + alpha * other; both must share size and bandwidth.
  BandMatrix axpy(double alpha, const BandMatrix& other) const {
    assert(other.n_ == n_ && other.bw_ == bw_);
    BandMatrix out = *this;
    for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] += alpha * other.data_[k];
    return out;
  }

  BandMatrix transpose() const {
    BandMatrix out(n_, bw_);
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - bw_); j <= std::min(n_ - 1, i + bw_); ++j)
        out.at(j, i) = (*this)(i, j);
    return out;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - bw_); j <= std::min(n_ - 1, i + bw_); ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  /// out += scale * this * x, column by column. x and out are n x ncols.
  template <typename In, typename Out, typename Scalar>
  void apply_add(const In& x, Out& out, Scalar scale) const {
    assert(x.rows() == n_ && out.rows() == n_ && x.cols() == out.cols());
    using Value = typename Out::Scalar;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (int i = 0; i < n_; ++i) {
        const int j0 = std::max(0, i - bw_);
        const int j1 = std::min(n_ - 1, i + bw_);
        const double* row = &data_[slot(i, j0)];
        Value acc(0);
        for (int j = j0; j <= j1; ++j) acc += row[j - j0] * x(j, c);
        out(i, c) += scale * acc;
      }
    }
  }

 private:
  std::size_t slot(int i, int j) const {
    return static_cast<std::size_t>(i) * (2 * bw_ + 1) + (j - i + bw_);
  }

  int n_ = 0;
  int bw_ = 0;
  std::vector<double> data_;
};

}  // namespace ndt
