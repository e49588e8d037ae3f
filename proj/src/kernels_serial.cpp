#include "kernels_inner.hpp"

namespace sp::kernels::serial {

void row_scores(const Matrix& X, const Matrix& W, Matrix& out) {
  require(X.cols() == W.cols(), "row_scores: dimension mismatch");
  out.resize(X.rows(), W.rows());
  for (Eigen::Index n = 0; n < X.rows(); ++n)
    for (Eigen::Index c = 0; c < W.rows(); ++c) out(n, c) = detail::dot_row(X, n, W, c);
}

void weighted_row_sums(const Matrix& coef, const Matrix& X, Matrix& out) {
  require(coef.rows() == X.rows(), "weighted_row_sums: row mismatch");
  out.resize(coef.cols(), X.cols());
  for (Eigen::Index c = 0; c < coef.cols(); ++c) detail::weighted_row_sum(coef, X, c, out);
}

void pairwise_sq_dist(const Matrix& P, const Matrix& Q, Matrix& out) {
  require(P.cols() == Q.cols(), "pairwise_sq_dist: dimension mismatch");
  out.resize(P.rows(), Q.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i)
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
  for (Eigen::Index d = 0; d < X.cols(); ++d) detail::class_sum_column(X, assignment, d, sums);
}

HingeTerms hinge_terms(const Matrix& Z, std::span<const std::ptrdiff_t> labels, Hinge kind) {
  detail::check_labels(Z, labels);
  HingeTerms terms{Vector(Z.cols()), Matrix(Z.rows(), Z.cols()), Matrix(Z.rows(), Z.cols())};
  for (Eigen::Index c = 0; c < Z.cols(); ++c) terms.class_loss(c) = detail::hinge_column(Z, labels, kind, c, terms);
  return terms;
}

std::vector<std::ptrdiff_t> argmax_rows(const Matrix& scores, std::span<const std::ptrdiff_t> candidates,
                                        std::span<const ClassId> keys) {
  detail::check_argmax_inputs(candidates, keys);
  std::vector<std::ptrdiff_t> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index n = 0; n < scores.rows(); ++n)
    out[static_cast<std::size_t>(n)] = detail::argmax_row(scores, n, candidates, keys);
  return out;
}

}  // namespace sp::kernels::serial
