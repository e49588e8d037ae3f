#pragma once

// Per-element bodies shared by the serial and OpenMP kernels. Keeping one
// definition guarantees the two variants perform identical arithmetic.

#include <algorithm>
#include <span>

#include "sp/kernels.hpp"

namespace sp::kernels::detail {

inline double dot_row(const Matrix& A, Eigen::Index i, const Matrix& B, Eigen::Index j) {
  const double* a = A.data() + i * A.cols();
  const double* b = B.data() + j * B.cols();
  double acc = 0.0;
  for (Eigen::Index d = 0; d < A.cols(); ++d) acc += a[d] * b[d];
  return acc;
}

inline double sq_dist_row(const Matrix& P, Eigen::Index i, const Matrix& Q, Eigen::Index j) {
  const double* p = P.data() + i * P.cols();
  const double* q = Q.data() + j * Q.cols();
  double acc = 0.0;
  for (Eigen::Index d = 0; d < P.cols(); ++d) {
    const double diff = p[d] - q[d];
    acc += diff * diff;
  }
  return acc;
}

// out(c, :) for one class c.
inline void weighted_row_sum(const Matrix& coef, const Matrix& X, Eigen::Index c, Matrix& out) {
  double* dst = out.data() + c * out.cols();
  std::fill(dst, dst + out.cols(), 0.0);
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    const double w = coef(n, c);
    if (w == 0.0) continue;
    const double* x = X.data() + n * X.cols();
    for (Eigen::Index d = 0; d < X.cols(); ++d) dst[d] += w * x[d];
  }
}

// Column d of the per-class sums.
inline void class_sum_column(const Matrix& X, std::span<const std::ptrdiff_t> assignment, Eigen::Index d,
                             Matrix& sums) {
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    const auto c = assignment[static_cast<std::size_t>(n)];
    if (c < 0) continue;
    sums(c, d) += X(n, d);
  }
}

// Loss of class column c; fills slope/active for that column.
inline double hinge_column(const Matrix& Z, std::span<const std::ptrdiff_t> labels, Hinge kind, Eigen::Index c,
                           HingeTerms& terms) {
  double loss = 0.0;
  for (Eigen::Index n = 0; n < Z.rows(); ++n) {
    const double target = labels[static_cast<std::size_t>(n)] == c ? 1.0 : -1.0;
    const double margin = 1.0 - target * Z(n, c);
    if (margin > 0.0) {
      if (kind == Hinge::squared) {
        loss += margin * margin;
        terms.slope(n, c) = -2.0 * target * margin;
      } else {
        loss += margin;
        terms.slope(n, c) = -target;
      }
      terms.active(n, c) = 1.0;
    } else {
      terms.slope(n, c) = 0.0;
      terms.active(n, c) = 0.0;
    }
  }
  return loss;
}

inline std::ptrdiff_t argmax_row(const Matrix& scores, Eigen::Index n, std::span<const std::ptrdiff_t> candidates,
                                 std::span<const ClassId> keys) {
  std::ptrdiff_t best = candidates[0];
  double best_score = scores(n, best);
  ClassId best_key = keys[0];
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = scores(n, candidates[i]);
    if (s > best_score || (s == best_score && keys[i] < best_key)) {
      best = candidates[i];
      best_score = s;
      best_key = keys[i];
    }
  }
  return best;
}

inline void check_argmax_inputs(std::span<const std::ptrdiff_t> candidates, std::span<const ClassId> keys) {
  require(!candidates.empty(), "empty candidate set");
  require(candidates.size() == keys.size(), "candidate/key length mismatch");
}

inline void check_labels(const Matrix& Z, std::span<const std::ptrdiff_t> labels) {
  require(static_cast<Eigen::Index>(labels.size()) == Z.rows(), "label count does not match score rows");
}

}  // namespace sp::kernels::detail
