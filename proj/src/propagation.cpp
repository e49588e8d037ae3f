#include "sp/propagation.hpp"

#include <algorithm>
#include <map>

#include "sp/data.hpp"

namespace sp {

namespace {

ClassPrototypes seen_image_prototypes(const Task& task) {
  const auto& train = *task.train;
  const std::span<const std::ptrdiff_t> assignment(train.labels);
  auto protos = class_prototypes(train.features, assignment, task.seen);
  for (std::size_t s = 0; s < protos.present.size(); ++s) {
    if (!protos.present[s]) fail("seen class " + std::to_string(task.seen[s]) + " has no training samples");
  }
  return protos;
}

SimilarityGraph image_graph_from(const Task& task, const ClassPrototypes& seen, std::span<const ClassId> predicted,
                                 double sigma) {
  require(static_cast<Eigen::Index>(predicted.size()) == task.test_features.rows(),
          "image_graph: prediction count does not match test samples");
  std::vector<std::ptrdiff_t> assignment(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    auto it = std::lower_bound(task.unseen.begin(), task.unseen.end(), predicted[i]);
    require(it != task.unseen.end() && *it == predicted[i], "image_graph: prediction is not an unseen class");
    assignment[i] = it - task.unseen.begin();
  }
  const auto unseen = class_prototypes(task.test_features, assignment, task.unseen);
  if (unseen.num_present() == 0) fail("degenerate assignment: every unseen class is empty");
  auto g = similarity_graph(seen, unseen, sigma);
  g.space = SpaceKind::image;
  return g;
}

}  // namespace

void PropagationOptions::validate() const {
  require(iterations >= 1, "propagation: iteration count must be at least 1");
  fusion.validate();
  solver.validate();
}

SimilarityGraph image_graph(const Task& task, std::span<const ClassId> predicted, double sigma) {
  return image_graph_from(task, seen_image_prototypes(task), predicted, sigma);
}

PropagationState propagate(const Task& task, const Hyperparams& params, const PropagationOptions& options,
                           const IterationObserver& observer) {
  options.validate();
  require(task.test_features.rows() >= 1, "propagation: no test samples");

  Objective objective = build_fused_objective(task, options.fusion, params, options.hinge);
  const auto seen_protos = seen_image_prototypes(task);

  std::vector<std::ptrdiff_t> candidates;
  std::vector<ClassId> row_ids(task.seen);
  row_ids.insert(row_ids.end(), task.unseen.begin(), task.unseen.end());
  for (Eigen::Index u = 0; u < task.num_unseen(); ++u) candidates.push_back(task.num_seen() + u);

  PropagationState state;
  std::optional<WarmStart> warm;
  for (int t = 1; t <= options.iterations; ++t) {
    const auto solved = alternate(objective, options.solver, warm);
    state.model.V = solved.V;
    state.model.beta = solved.beta;
    state.model.A = synthesize(solved.V, solved.beta, objective.graphs);
    auto predictions = predict_batch(state.model.A, candidates, row_ids, task.test_features);

    const bool repeated = !state.history.empty() && state.history.back().predictions == predictions;
    state.history.push_back({t, predictions, solved.beta, solved.trace});
    state.predicted = std::move(predictions);
    state.iteration = t;
    if (observer) observer(state.history.back());

    if (options.fusion.include_image) {
      objective.graphs.front() = image_graph_from(task, seen_protos, state.predicted, params.sigma_image);
    }
    if (options.warm_start) warm = WarmStart{solved.V, solved.beta};

    if (repeated && options.early_exit) {
      state.fixed_point = true;
      break;
    }
  }
  state.graphs = objective.graphs;
  return state;
}

EvalReport evaluate(std::span<const ClassId> predicted, std::span<const ClassId> truth,
                    std::span<const ClassId> classes) {
  require(predicted.size() == truth.size(), "evaluate: length mismatch between predictions and truth");
  std::map<ClassId, ClassAccuracy> table;
  for (auto id : classes) table[id].id = id;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto it = table.find(truth[i]);
    require(it != table.end(), "evaluate: true label " + std::to_string(truth[i]) + " is not an evaluated class");
    ++it->second.count;
    if (predicted[i] == truth[i]) ++it->second.correct;
  }
  EvalReport report;
  double total = 0.0;
  for (auto& [id, entry] : table) {
    if (entry.count == 0) continue;
    entry.accuracy = static_cast<double>(entry.correct) / static_cast<double>(entry.count);
    total += entry.accuracy;
    report.per_class.push_back(entry);
  }
  if (!report.per_class.empty()) report.mean_accuracy = total / static_cast<double>(report.per_class.size());
  return report;
}

}  // namespace sp
