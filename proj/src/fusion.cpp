#include "sp/fusion.hpp"

#include <cmath>
#include <set>

namespace sp {

double Hyperparams::sigma_for(const std::string& source) const {
  auto it = sigma_sources.find(source);
  return it == sigma_sources.end() ? 1.0 : it->second;
}

void Hyperparams::validate() const {
  require(lambda > 0.0 && std::isfinite(lambda), "hyperparameters: lambda must be positive");
  require(gamma >= 0.0 && std::isfinite(gamma), "hyperparameters: gamma must be nonnegative");
  require(sigma_image > 0.0 && std::isfinite(sigma_image), "hyperparameters: sigma_image must be positive");
  for (const auto& [name, sigma] : sigma_sources)
    require(sigma > 0.0 && std::isfinite(sigma), "hyperparameters: sigma for " + name + " must be positive");
}

Task make_task(const Dataset& dataset) {
  dataset.validate();
  auto train = std::make_shared<TrainingSet>();
  const auto train_rows = dataset.train_indices();
  const auto test_rows = dataset.test_indices();
  require(!test_rows.empty(), "dataset has no test samples");

  train->num_seen = static_cast<Eigen::Index>(dataset.num_seen());
  train->features.resize(static_cast<Eigen::Index>(train_rows.size()), dataset.dim());
  train->labels.reserve(train_rows.size());
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    const auto n = train_rows[i];
    train->features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(static_cast<Eigen::Index>(n));
    train->labels.push_back(static_cast<std::ptrdiff_t>(*dataset.seen_index(dataset.labels[n])));
  }

  Task task;
  task.train = std::move(train);
  task.test_rows = test_rows;
  task.test_features.resize(static_cast<Eigen::Index>(test_rows.size()), dataset.dim());
  for (std::size_t i = 0; i < test_rows.size(); ++i)
    task.test_features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(static_cast<Eigen::Index>(test_rows[i]));
  task.seen = dataset.seen;
  task.unseen = dataset.unseen;
  task.semantic = dataset.semantic;
  return task;
}

void FusionSpec::validate() const {
  const std::set<std::string> unique(sources.begin(), sources.end());
  require(unique.size() == sources.size(), "fusion: duplicate source name");
  require(!sources.empty(), "fusion: at least one semantic source is required");
}

Matrix fused_semantic_weight(std::span<const double> weights, std::span<const SimilarityGraph> graphs) {
  require(!graphs.empty(), "fused_semantic_weight: no graphs");
  require(weights.size() == graphs.size(), "fused_semantic_weight: weight count does not match graph count");
  Matrix fused = weights[0] * graphs[0].weights;
  for (std::size_t j = 1; j < graphs.size(); ++j) {
    require(graphs[j].weights.rows() == fused.rows() && graphs[j].weights.cols() == fused.cols(),
            "fused_semantic_weight: shape mismatch");
    fused += weights[j] * graphs[j].weights;
  }
  return fused;
}

SimilarityGraph semantic_graph(const Task& task, const std::string& source, double sigma) {
  auto it = task.semantic.find(source);
  if (it == task.semantic.end()) fail("unknown source name: " + source);
  const Matrix& table = it->second;
  require(table.rows() == task.num_seen() + task.num_unseen(), "embedding row count mismatch for source " + source);
  return similarity_graph(table.topRows(task.num_seen()), table.bottomRows(task.num_unseen()), sigma, {},
                          SpaceKind::semantic, source);
}

Objective build_fused_objective(const Task& task, const FusionSpec& spec, const Hyperparams& params, Hinge hinge) {
  spec.validate();
  params.validate();
  for (const auto& name : spec.sources)
    if (!task.semantic.count(name)) fail("unknown source name: " + name);

  Objective obj;
  obj.lambda = params.lambda;
  obj.gamma = params.gamma;
  obj.train = task.train;
  obj.hinge = hinge;
  obj.has_image_slot = spec.include_image;
  if (spec.include_image) obj.graphs.push_back(zero_graph(task.num_seen(), task.num_unseen()));
  for (const auto& name : spec.sources) obj.graphs.push_back(semantic_graph(task, name, params.sigma_for(name)));
  obj.validate();
  return obj;
}

}  // namespace sp
