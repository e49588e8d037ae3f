#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sp/core.hpp"
#include "sp/fusion.hpp"
#include "sp/graph.hpp"
#include "sp/model.hpp"
#include "sp/optimizer.hpp"

namespace sp {

struct PropagationOptions {
  int iterations = 10;        // upper bound on rounds
  bool early_exit = true;     // stop once predictions repeat
  bool warm_start = true;     // seed each round with the previous V and beta
  FusionSpec fusion;
  Hinge hinge = Hinge::squared;
  SolverSettings solver;

  void validate() const;
};

struct IterationRecord {
  int t = 0;                          // 1-based round
  std::vector<ClassId> predictions;   // per test sample, unseen ids only
  Vector beta;
  std::vector<double> objective_trace;
};

struct PropagationState {
  int iteration = 0;                    // rounds executed
  std::vector<SimilarityGraph> graphs;  // image graph refreshed from the last predictions
  ModelState model;
  std::vector<ClassId> predicted;
  std::vector<IterationRecord> history;
  bool fixed_point = false;             // early exit fired
};

// Per-round hook, e.g. for logging; called after predictions are made.
using IterationObserver = std::function<void(const IterationRecord&)>;

// Rounds of: optimize V and beta, synthesize classifiers, label the test
// samples over the unseen classes, then rebuild the image graph from the
// seen-class training means and the predicted unseen-class means.
PropagationState propagate(const Task& task, const Hyperparams& params, const PropagationOptions& options,
                           const IterationObserver& observer = {});

// Image graph from seen training means and the means of test samples grouped
// by predicted class; classes nobody was assigned to are masked.
SimilarityGraph image_graph(const Task& task, std::span<const ClassId> predicted, double sigma);

struct ClassAccuracy {
  ClassId id = 0;
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::vector<ClassAccuracy> per_class;  // classes with at least one sample
  double mean_accuracy = 0.0;            // unweighted mean over per_class
};

EvalReport evaluate(std::span<const ClassId> predicted, std::span<const ClassId> truth,
                    std::span<const ClassId> classes);

}  // namespace sp
