#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "sp/core.hpp"
#include "sp/graph.hpp"
#include "sp/kernels.hpp"

namespace sp {

using kernels::Hinge;

// Labeled training samples; labels are dense seen-class indices.
struct TrainingSet {
  Matrix features;                       // N x D
  std::vector<std::ptrdiff_t> labels;    // N, each in [0, num_seen)
  Eigen::Index num_seen = 0;

  void validate() const;
};

// One-vs-rest hinge loss of the synthesized seen classifiers, a ridge term on
// them, and the structure-alignment penalty
//   gamma/2 * || beta_0 W_image - sum_j beta_j W_source_j ||_F^2.
//
// graphs[0] is the image graph when has_image_slot is set; the remaining
// entries are semantic sources in fusion order. Without an image slot the
// penalty is evaluated with W_image = 0, which is exactly the state of a
// propagation run before its first image graph exists.
struct Objective {
  double lambda = 1.0;
  double gamma = 0.0;
  std::vector<SimilarityGraph> graphs;
  bool has_image_slot = true;
  std::shared_ptr<const TrainingSet> train;
  Hinge hinge = Hinge::squared;

  Eigen::Index num_seen() const { return graphs.front().num_seen(); }
  Eigen::Index num_unseen() const { return graphs.front().num_unseen(); }
  Eigen::Index dim() const { return train->features.cols(); }
  Eigen::Index num_weights() const { return static_cast<Eigen::Index>(graphs.size()); }

  void validate() const;
};

struct ObjectiveTerms {
  double hinge = 0.0;
  double ridge = 0.0;
  double alignment = 0.0;

  double total() const { return hinge + ridge + alignment; }
};

struct SolverSettings {
  int max_outer_iters = 50;
  double outer_tolerance = 1e-5;  // relative decrease per outer iteration
  double v_tolerance = 1e-6;      // relative decrease per Newton step on V
  int v_max_steps = 500;
  double beta_tolerance = 1e-6;   // relative decrease per step on beta
  int beta_max_steps = 200;
  int cg_max_iters = 250;
  double cg_tolerance = 1e-4;     // CG residual relative to the gradient norm
  double armijo = 1e-4;
  int max_backtracks = 60;

  void validate() const;
};

ObjectiveTerms objective_terms(const Matrix& V, const Vector& beta, const Objective& objective);
double loss_value(const Matrix& V, const Vector& beta, const Objective& objective);

// Gradient of the full objective with respect to V (U x D).
Matrix gradient_V(const Matrix& V, const Vector& beta, const Objective& objective);

// Unconstrained partial derivatives with respect to each beta entry.
Vector gradient_beta(const Matrix& V, const Vector& beta, const Objective& objective);

// Coordinates of beta the solver may move. The image weight is pinned to 0
// while the image graph is the all-zero initialization.
std::vector<char> free_beta_coordinates(const Objective& objective);

// Uniform weights over the free coordinates.
Vector initial_beta(const Objective& objective);

// Newton-CG with Armijo backtracking on the V subproblem; never increases the objective.
Matrix solve_V(const Vector& beta, const Objective& objective, const SolverSettings& settings, const Matrix& V_init);

// Simplex-constrained beta subproblem; never increases the objective.
Vector solve_beta(const Matrix& V, const Objective& objective, const SolverSettings& settings,
                  const Vector& beta_init);

struct WarmStart {
  Matrix V;
  Vector beta;
};

struct AlternateResult {
  Matrix V;
  Vector beta;
  std::vector<double> trace;  // objective at start and after each outer iteration
  int outer_iterations = 0;
};

AlternateResult alternate(const Objective& objective, const SolverSettings& settings,
                          const std::optional<WarmStart>& warm = std::nullopt);

}  // namespace sp
