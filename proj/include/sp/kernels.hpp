#pragma once

// Data-parallel inner loops of the solver.
//
// Every kernel exists twice: `serial` is the reference implementation and
// `omp` distributes independent output rows/columns across OpenMP threads.
// Each output element is produced by one thread with the same ascending
// reduction order as the serial loop, so both variants are bitwise equal.
// The unqualified functions in `sp::kernels` dispatch to `omp` when the
// library was built with OpenMP and to `serial` otherwise.

#include <span>
#include <vector>

#include "sp/core.hpp"

namespace sp::kernels {

enum class Hinge { squared, plain };

// Per-class hinge terms for a score matrix Z (N x C) against one-vs-rest
// targets derived from `labels` (class index per row, in [0, C)).
struct HingeTerms {
  Vector class_loss;  // C: sum over rows of the per-element loss
  Matrix slope;       // N x C: d loss / d z
  Matrix active;      // N x C: 1 where the margin is violated, else 0
};

namespace serial {

// out(n, c) = <x_n, w_c>; X is N x D, W is C x D.
void row_scores(const Matrix& X, const Matrix& W, Matrix& out);
// out(c, :) = sum_n coef(n, c) * x_n, summed over ascending n.
void weighted_row_sums(const Matrix& coef, const Matrix& X, Matrix& out);
// out(i, j) = ||p_i - q_j||^2, summed over ascending coordinates.
void pairwise_sq_dist(const Matrix& P, const Matrix& Q, Matrix& out);
// Per-class sums of rows with assignment[n] in [0, C); rows marked -1 are skipped.
void class_sums(const Matrix& X, std::span<const std::ptrdiff_t> assignment, Eigen::Index num_classes,
                Matrix& sums, std::vector<std::size_t>& counts);
HingeTerms hinge_terms(const Matrix& Z, std::span<const std::ptrdiff_t> labels, Hinge kind);
// Row-wise argmax over candidate columns; ties go to the candidate with the smallest key.
std::vector<std::ptrdiff_t> argmax_rows(const Matrix& scores, std::span<const std::ptrdiff_t> candidates,
                                        std::span<const ClassId> keys);

}  // namespace serial

// Same contracts as the serial versions.
namespace omp {

void row_scores(const Matrix& X, const Matrix& W, Matrix& out);
void weighted_row_sums(const Matrix& coef, const Matrix& X, Matrix& out);
void pairwise_sq_dist(const Matrix& P, const Matrix& Q, Matrix& out);
void class_sums(const Matrix& X, std::span<const std::ptrdiff_t> assignment, Eigen::Index num_classes,
                Matrix& sums, std::vector<std::size_t>& counts);
HingeTerms hinge_terms(const Matrix& Z, std::span<const std::ptrdiff_t> labels, Hinge kind);
std::vector<std::ptrdiff_t> argmax_rows(const Matrix& scores, std::span<const std::ptrdiff_t> candidates,
                                        std::span<const ClassId> keys);

}  // namespace omp

#ifdef SP_HAVE_OPENMP
using namespace omp;
#else
using namespace serial;
#endif

// Number of threads the omp variants will use (1 without OpenMP).
int max_threads();

// Honors SP_NUM_THREADS when set to a positive integer.
void configure_threads_from_env();

}  // namespace sp::kernels
