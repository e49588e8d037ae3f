#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sp/core.hpp"
#include "sp/data.hpp"
#include "sp/graph.hpp"
#include "sp/optimizer.hpp"

namespace sp {

struct Hyperparams {
  double lambda = 1.0 / 65536.0;
  double gamma = 1.0 / 65536.0;
  double sigma_image = 1.0;
  std::map<std::string, double> sigma_sources;  // missing sources use 1

  double sigma_for(const std::string& source) const;
  void validate() const;
};

// The solver-facing view of a dataset: labeled seen-class samples, the
// unlabeled test features, and the semantic tables. Ground truth for the test
// samples is deliberately absent.
struct Task {
  std::shared_ptr<const TrainingSet> train;
  Matrix test_features;
  std::vector<std::size_t> test_rows;  // sample index in the source dataset
  std::vector<ClassId> seen;
  std::vector<ClassId> unseen;
  std::map<std::string, Matrix> semantic;  // (S+U) x D_src, rows [seen..., unseen...]

  Eigen::Index num_seen() const { return static_cast<Eigen::Index>(seen.size()); }
  Eigen::Index num_unseen() const { return static_cast<Eigen::Index>(unseen.size()); }
};

Task make_task(const Dataset& dataset);

// Which graphs enter the objective: the image slot first (unless disabled),
// then the named semantic sources in order.
struct FusionSpec {
  std::vector<std::string> sources;
  bool include_image = true;

  std::size_t k() const { return sources.size() + (include_image ? 1 : 0); }
  void validate() const;
};

// sum_j weights[j] * W_j over the per-source graphs.
Matrix fused_semantic_weight(std::span<const double> weights, std::span<const SimilarityGraph> graphs);

// Semantic-space graph for one source with its own bandwidth.
SimilarityGraph semantic_graph(const Task& task, const std::string& source, double sigma);

// Objective over [zero image graph, sources...] (or sources only). The image
// slot starts as the all-zero graph and is refreshed by propagation.
Objective build_fused_objective(const Task& task, const FusionSpec& spec, const Hyperparams& params,
                                Hinge hinge = Hinge::squared);

}  // namespace sp
