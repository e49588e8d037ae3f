#include <cstdlib>
#include <string>

#ifdef SP_HAVE_OPENMP
#include <omp.h>
#endif

#include "kernels_inner.hpp"

namespace sp::kernels {

int max_threads() {
#ifdef SP_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void configure_threads_from_env() {
  const char* value = std::getenv("SP_NUM_THREADS");
  if (value == nullptr) return;
  char* end = nullptr;
  const long n = std::strtol(value, &end, 10);
  if (end == value || *end != '\0' || n <= 0) return;
#ifdef SP_HAVE_OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

namespace omp {

// Without OpenMP the pragmas are ignored and these reduce to the serial loops.

void row_scores(const Matrix& X, const Matrix& W, Matrix& out) {
  require(X.cols() == W.cols(), "row_scores: dimension mismatch");
  out.resize(X.rows(), W.rows());
  const Eigen::Index rows = X.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index n = 0; n < rows; ++n)
    for (Eigen::Index c = 0; c < W.rows(); ++c) out(n, c) = detail::dot_row(X, n, W, c);
}

void weighted_row_sums(const Matrix& coef, const Matrix& X, Matrix& out) {
  require(coef.rows() == X.rows(), "weighted_row_sums: row mismatch");
  out.resize(coef.cols(), X.cols());
  const Eigen::Index classes = coef.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < classes; ++c) detail::weighted_row_sum(coef, X, c, out);
}

void pairwise_sq_dist(const Matrix& P, const Matrix& Q, Matrix& out) {
  require(P.cols() == Q.cols(), "pairwise_sq_dist: dimension mismatch");
  out.resize(P.rows(), Q.rows());
  const Eigen::Index rows = P.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < Q.rows(); ++j) out(i, j) = detail::sq_dist_row(P, i, Q, j);
}

void class_sums(const Matrix& X, std::span<const std::ptrdiff_t> assignment, Eigen::Index num_classes,
                Matrix& sums, std::vector<std::size_t>& counts) {
  require(static_cast<Eigen::Index>(assignment.size()) == X.rows(), "class_sums: assignment length mismatch");
  sums = Matrix::Zero(num_classes, X.cols());
  counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (auto c : assignment) {
    require(c >= -1 && c < num_classes, "class_sums: class index out of range");
    if (c >= 0) ++counts[static_cast<std::size_t>(c)];
  }
  // Split over feature columns: each column keeps the ascending sample order.
  const Eigen::Index dims = X.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index d = 0; d < dims; ++d) detail::class_sum_column(X, assignment, d, sums);
}

HingeTerms hinge_terms(const Matrix& Z, std::span<const std::ptrdiff_t> labels, Hinge kind) {
  detail::check_labels(Z, labels);
  HingeTerms terms{Vector(Z.cols()), Matrix(Z.rows(), Z.cols()), Matrix(Z.rows(), Z.cols())};
  const Eigen::Index classes = Z.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < classes; ++c) terms.class_loss(c) = detail::hinge_column(Z, labels, kind, c, terms);
  return terms;
}

std::vector<std::ptrdiff_t> argmax_rows(const Matrix& scores, std::span<const std::ptrdiff_t> candidates,
                                        std::span<const ClassId> keys) {
  detail::check_argmax_inputs(candidates, keys);
  std::vector<std::ptrdiff_t> out(static_cast<std::size_t>(scores.rows()));
  const Eigen::Index rows = scores.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index n = 0; n < rows; ++n)
    out[static_cast<std::size_t>(n)] = detail::argmax_row(scores, n, candidates, keys);
  return out;
}

}  // namespace omp
}  // namespace sp::kernels
