#include "doctest.h"

#include <numeric>
#include <vector>

#include "sp/fusion.hpp"
#include "sp/model.hpp"
#include "sp/synth.hpp"

using namespace sp;

namespace {

SimilarityGraph graph_of(const Matrix& w) {
  SimilarityGraph g;
  g.weights = w;
  g.defined.assign(static_cast<std::size_t>(w.cols()), 1);
  return g;
}

Task four_source_task() {
  SynthParams params;
  params.seen = 6;
  params.unseen = 3;
  params.dim = 5;
  params.train_per_class = 6;
  params.test_per_class = 5;
  params.sources = {{"att", 4, 0.2}, {"w2v", 6, 0.3}, {"glo", 3, 0.1}, {"hie", 5, 0.4}};
  params.seed = 99;
  return make_task(generate_synthetic(params));
}

Vector weights(std::initializer_list<double> w) {
  Vector v(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double x : w) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("fused semantic weight examples") {
  Matrix a(1, 2), b(1, 2);
  a << 1, 0;
  b << 0, 1;
  const std::vector<SimilarityGraph> one{graph_of(a)};
  const std::vector<double> unit{1.0};
  CHECK(fused_semantic_weight(unit, one) == a);

  Matrix w(2, 2);
  w << 0.25, 0.75, 0.6, 0.4;
  const std::vector<SimilarityGraph> same{graph_of(w), graph_of(w)};
  const std::vector<double> split{0.2, 0.5};
  CHECK((fused_semantic_weight(split, same) - 0.7 * w).cwiseAbs().maxCoeff() <= 1e-15);

  const std::vector<SimilarityGraph> pair{graph_of(a), graph_of(b)};
  const std::vector<double> mix{0.3, 0.7};
  const Matrix fused = fused_semantic_weight(mix, pair);
  CHECK(fused(0, 0) == 0.3);
  CHECK(fused(0, 1) == 0.7);

  const std::vector<double> short_weights{1.0};
  CHECK_THROWS_AS(fused_semantic_weight(short_weights, pair), Error);
}

TEST_CASE("fusion sets give the expected weight counts") {
  const Task task = four_source_task();
  const Hyperparams params;
  const FusionSpec without_att{{"w2v", "glo", "hie"}, true};
  CHECK(without_att.k() == 4);
  CHECK(build_fused_objective(task, without_att, params).num_weights() == 4);
  const FusionSpec all{{"att", "w2v", "glo", "hie"}, true};
  CHECK(all.k() == 5);
  CHECK(build_fused_objective(task, all, params).num_weights() == 5);
  const FusionSpec no_image{{"att"}, false};
  CHECK(no_image.k() == 1);
}

TEST_CASE("fusion spec validation") {
  const Task task = four_source_task();
  CHECK_THROWS_WITH_AS(build_fused_objective(task, FusionSpec{{"att", "xyz"}, true}, Hyperparams{}),
                       "unknown source name: xyz", Error);
  CHECK_THROWS_AS(FusionSpec({{"att", "att"}, true}).validate(), Error);
  CHECK_THROWS_AS(FusionSpec({{}, true}).validate(), Error);
}

TEST_CASE("one source reduces exactly to the hand-built two-graph objective") {
  const Task task = four_source_task();
  Hyperparams params;
  params.lambda = 0.125;
  params.gamma = 0.5;
  params.sigma_sources["w2v"] = 4.0;
  const Objective fused = build_fused_objective(task, FusionSpec{{"w2v"}, true}, params);

  const Matrix& table = task.semantic.at("w2v");
  Objective manual;
  manual.lambda = 0.125;
  manual.gamma = 0.5;
  manual.train = task.train;
  manual.graphs = {zero_graph(6, 3), similarity_graph(table.topRows(6), table.bottomRows(3), 4.0)};
  manual.validate();

  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix V(3, 5);
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = rng.normal();
    const double b = rng.uniform();
    const Vector beta = weights({b, 1.0 - b});
    CHECK(loss_value(V, beta, fused) == loss_value(V, beta, manual));
  }
}

TEST_CASE("all weight on one source predicts like that source alone") {
  const Task task = four_source_task();
  const Hyperparams params;
  const auto fused = build_fused_objective(task, FusionSpec{{"att", "w2v", "glo", "hie"}, false}, params);
  std::vector<ClassId> ids(task.seen);
  ids.insert(ids.end(), task.unseen.begin(), task.unseen.end());
  std::vector<std::ptrdiff_t> rows(3);
  std::iota(rows.begin(), rows.end(), 6);

  Rng rng(2);
  Matrix V(3, 5);
  for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = rng.normal();
  const char* names[] = {"att", "w2v", "glo", "hie"};
  for (int j = 0; j < 4; ++j) {
    Vector one_hot = Vector::Zero(4);
    one_hot(j) = 1.0;
    const auto single = build_fused_objective(task, FusionSpec{{names[j]}, false}, params);
    const Matrix A_fused = synthesize(V, one_hot, fused.graphs);
    const Matrix A_single = synthesize(V, weights({1.0}), single.graphs);
    CHECK(A_fused == A_single);
    CHECK(predict_batch(A_fused, rows, ids, task.test_features) ==
          predict_batch(A_single, rows, ids, task.test_features));
  }
}

TEST_CASE("objective is invariant under permuting sources with their weights") {
  const Task task = four_source_task();
  Hyperparams params;
  params.gamma = 0.75;
  params.lambda = 0.01;
  const auto a = build_fused_objective(task, FusionSpec{{"att", "w2v", "glo", "hie"}, true}, params);
  const auto b = build_fused_objective(task, FusionSpec{{"hie", "att", "glo", "w2v"}, true}, params);
  Objective a_img = a, b_img = b;
  // A data-driven image graph so that every slot matters.
  a_img.graphs[0] = graph_of(a.graphs[2].weights);
  b_img.graphs[0] = a_img.graphs[0];

  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix V(3, 5);
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = rng.normal();
    Vector beta_a(5);
    for (int g = 0; g < 5; ++g) beta_a(g) = rng.uniform();
    beta_a /= beta_a.sum();
    // b's order is (image, hie, att, glo, w2v).
    const Vector beta_b = weights({beta_a(0), beta_a(4), beta_a(1), beta_a(3), beta_a(2)});
    const double fa = loss_value(V, beta_a, a_img);
    CHECK(loss_value(V, beta_b, b_img) == doctest::Approx(fa).epsilon(1e-12));
  }
}

TEST_CASE("missing sources fall back to unit bandwidth") {
  Hyperparams params;
  params.sigma_sources["att"] = 8.0;
  CHECK(params.sigma_for("att") == 8.0);
  CHECK(params.sigma_for("w2v") == 1.0);
  params.sigma_image = 0.0;
  CHECK_THROWS_AS(params.validate(), Error);
}

TEST_CASE("tasks never carry test truth") {
  SynthParams sp_params;
  sp_params.seen = 3;
  sp_params.unseen = 2;
  const Dataset ds = generate_synthetic(sp_params);
  const Task task = make_task(ds);
  CHECK(task.test_features.rows() == static_cast<Eigen::Index>(ds.test_indices().size()));
  CHECK(task.train->features.rows() == static_cast<Eigen::Index>(ds.train_indices().size()));
  for (std::size_t i = 0; i < task.test_rows.size(); ++i)
    CHECK(task.test_features.row(static_cast<Eigen::Index>(i)) == ds.features.row(static_cast<Eigen::Index>(task.test_rows[i])));
}
