#pragma once

#include <span>
#include <vector>

#include "sp/core.hpp"
#include "sp/graph.hpp"

namespace sp {

// Phantom unseen-class vectors, the graph weighting, and the classifiers
// synthesized from them.
struct ModelState {
  Matrix V;     // U x D phantom classes
  Vector beta;  // one weight per graph, [image, sources...]
  Matrix A;     // (S + U) x D classifiers, rows [seen..., unseen...]
};

// Throws unless beta is nonnegative and sums to 1 within `tolerance`.
void check_simplex(const Vector& beta, double tolerance, const char* what);

// S x U matrix sum_g beta[g] * W_g, accumulated in graph order.
Matrix blend_weights(const Vector& beta, std::span<const SimilarityGraph> graphs);

// Seen rows are convex combinations of phantom classes under the blended
// weights; unseen rows are the phantom classes themselves.
Matrix synthesize(const Matrix& V, const Vector& beta, std::span<const SimilarityGraph> graphs);

// argmax over candidate rows of <a_c, x>; ties go to the smallest class id.
// `row_ids` maps every row of A to its class id.
ClassId predict(const Matrix& A, std::span<const std::ptrdiff_t> candidate_rows, std::span<const ClassId> row_ids,
                std::span<const double> x);

// Batch form of predict over the rows of X.
std::vector<ClassId> predict_batch(const Matrix& A, std::span<const std::ptrdiff_t> candidate_rows,
                                   std::span<const ClassId> row_ids, const Matrix& X);

}  // namespace sp
