#include "sp/model.hpp"

#include <cmath>
#include <string>

#include "sp/kernels.hpp"

namespace sp {

void check_simplex(const Vector& beta, double tolerance, const char* what) {
  require(beta.size() >= 1, std::string(what) + ": empty weight vector");
  double total = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    require(std::isfinite(beta(i)) && beta(i) >= -tolerance && beta(i) <= 1.0 + tolerance,
            std::string(what) + ": weight outside [0, 1]");
    total += beta(i);
  }
  require(std::abs(total - 1.0) <= tolerance, std::string(what) + ": weights do not sum to 1");
}

Matrix blend_weights(const Vector& beta, std::span<const SimilarityGraph> graphs) {
  require(!graphs.empty(), "blend_weights: no graphs");
  require(beta.size() == static_cast<Eigen::Index>(graphs.size()), "blend_weights: beta length does not match graph count");
  const auto S = graphs.front().num_seen();
  const auto U = graphs.front().num_unseen();
  for (const auto& g : graphs) require(g.num_seen() == S && g.num_unseen() == U, "blend_weights: graph shape mismatch");
  Matrix blended = beta(0) * graphs[0].weights;
  for (std::size_t g = 1; g < graphs.size(); ++g) blended += beta(static_cast<Eigen::Index>(g)) * graphs[g].weights;
  return blended;
}

Matrix synthesize(const Matrix& V, const Vector& beta, std::span<const SimilarityGraph> graphs) {
  check_simplex(beta, 1e-6, "synthesize");
  const Matrix blended = blend_weights(beta, graphs);
  require(V.rows() == blended.cols(), "synthesize: V rows do not match unseen class count");
  const auto S = blended.rows();
  const auto U = blended.cols();
  Matrix A(S + U, V.cols());
  A.topRows(S).noalias() = blended * V;
  A.bottomRows(U) = V;
  return A;
}

ClassId predict(const Matrix& A, std::span<const std::ptrdiff_t> candidate_rows, std::span<const ClassId> row_ids,
                std::span<const double> x) {
  require(static_cast<Eigen::Index>(x.size()) == A.cols(), "predict: feature dimension mismatch");
  Matrix sample(1, A.cols());
  for (Eigen::Index d = 0; d < A.cols(); ++d) sample(0, d) = x[static_cast<std::size_t>(d)];
  return predict_batch(A, candidate_rows, row_ids, sample).front();
}

std::vector<ClassId> predict_batch(const Matrix& A, std::span<const std::ptrdiff_t> candidate_rows,
                                   std::span<const ClassId> row_ids, const Matrix& X) {
  require(!candidate_rows.empty(), "predict: empty candidate set");
  require(static_cast<Eigen::Index>(row_ids.size()) == A.rows(), "predict: row id count mismatch");
  require(X.cols() == A.cols(), "predict: feature dimension mismatch");
  std::vector<ClassId> keys;
  keys.reserve(candidate_rows.size());
  for (auto r : candidate_rows) {
    require(r >= 0 && r < A.rows(), "predict: candidate row out of range");
    keys.push_back(row_ids[static_cast<std::size_t>(r)]);
  }
  Matrix scores;
  kernels::row_scores(X, A, scores);
  const auto best = kernels::argmax_rows(scores, candidate_rows, keys);
  std::vector<ClassId> out;
  out.reserve(best.size());
  for (auto r : best) out.push_back(row_ids[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace sp
