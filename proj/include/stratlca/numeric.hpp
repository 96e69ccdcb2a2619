#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "stratlca/types.hpp"

namespace stratlca {

/// Row-wise softmax of a matrix of log weights, plus the row log-sum-exp.
/// Exponentials are accumulated in descending order so the result is exactly
/// invariant under column permutations of the input.
template <class Scalar>
struct RowSoftmax {
  MatrixX<Scalar> weights;     // exp(L - lse) per row, rows sum to 1
  VectorX<Scalar> log_norms;   // log-sum-exp per row
};

template <class Derived>
RowSoftmax<typename Derived::Scalar> softmax_rows_from_log(
    const Eigen::MatrixBase<Derived>& log_w) {
  using Scalar = typename Derived::Scalar;
  const Index n = log_w.rows();
  const Index k = log_w.cols();
  RowSoftmax<Scalar> out;
  out.weights.resize(n, k);
  out.log_norms.resize(n);
  std::vector<Scalar> buf(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) {
    const Scalar m = log_w.row(i).maxCoeff();
    if (!(m > -std::numeric_limits<Scalar>::infinity())) {
      out.weights.row(i).setConstant(Scalar(1) / static_cast<Scalar>(k));
      out.log_norms[i] = -std::numeric_limits<Scalar>::infinity();
      continue;
    }
    for (Index j = 0; j < k; ++j) {
      const Scalar e = std::exp(log_w(i, j) - m);
      out.weights(i, j) = e;
      buf[static_cast<std::size_t>(j)] = e;
    }
    std::sort(buf.begin(), buf.end(), std::greater<Scalar>());
    Scalar sum = 0;
    for (const Scalar e : buf) sum += e;
    out.weights.row(i) /= sum;
    out.log_norms[i] = m + std::log(sum);
  }
  return out;
}

/// Row-wise log-sum-exp, permutation-exact (see softmax_rows_from_log).
template <class Derived>
VectorX<typename Derived::Scalar> log_sum_exp_rows(
    const Eigen::MatrixBase<Derived>& log_w) {
  return softmax_rows_from_log(log_w).log_norms;
}

}  // namespace stratlca
