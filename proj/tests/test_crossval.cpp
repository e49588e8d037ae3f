#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "sp/crossval.hpp"
#include "sp/synth.hpp"
#include "support.hpp"

using namespace sp;
using test_support::fixture;

namespace {

std::vector<ClassId> ids(int count, ClassId first = 1) {
  std::vector<ClassId> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), first);
  return v;
}

Dataset small_dataset(std::uint64_t seed = 4) {
  SynthParams p;
  p.seen = 6;
  p.unseen = 2;
  p.dim = 6;
  p.train_per_class = 6;
  p.test_per_class = 6;
  p.sources = {{"att", 5, 0.2}};
  p.seed = seed;
  return generate_synthetic(p);
}

PropagationOptions quick_options() {
  PropagationOptions o;
  o.iterations = 3;
  o.fusion.sources = {"att"};
  return o;
}

GridSpec small_grid() {
  GridSpec g;
  g.lambdas = {0.25, 0.0625};
  g.gammas = {0.5, 0.125};
  g.sigmas = {1.0, 4.0};
  return g;
}

}  // namespace

TEST_CASE("AwA-sized split holds out eight of forty classes") {
  const auto seen = ids(40);
  for (int fold = 0; fold < 2; ++fold) {
    const auto split = split_seen_classes(seen, 10.0 / 50.0, fold, kDefaultSeed);
    CHECK(split.validation.size() == 8);
    CHECK(split.train.size() == 32);
    std::vector<ClassId> all = split.train;
    all.insert(all.end(), split.validation.begin(), split.validation.end());
    std::sort(all.begin(), all.end());
    CHECK(all == seen);
  }
  CHECK(split_seen_classes(seen, 0.2, 0, 1).validation != split_seen_classes(seen, 0.2, 1, 1).validation);
}

TEST_CASE("two seen classes split one and one") {
  const std::vector<ClassId> seen{4, 9};
  const auto a = split_seen_classes(seen, 0.5, 0, 3);
  const auto b = split_seen_classes(seen, 0.5, 1, 3);
  CHECK(a.train.size() == 1);
  CHECK(a.validation.size() == 1);
  CHECK(a.validation == b.train);
}

TEST_CASE("splits are deterministic and distinct across folds") {
  const auto seen = ids(7, 10);
  for (std::uint64_t seed : {std::uint64_t{1}, std::uint64_t{2}, kDefaultSeed}) {
    const auto a = split_seen_classes(seen, 0.3, 0, seed);
    const auto again = split_seen_classes(seen, 0.3, 0, seed);
    CHECK(a.train == again.train);
    CHECK(a.validation == again.validation);
    CHECK(a.validation != split_seen_classes(seen, 0.3, 1, seed).validation);
  }
}

TEST_CASE("ratios that leave a side empty are rejected") {
  const auto seen = ids(3);
  CHECK_THROWS_AS(split_seen_classes(seen, 0.1, 0, 1), Error);
  CHECK_THROWS_AS(split_seen_classes(seen, 0.9, 0, 1), Error);
  CHECK_THROWS_AS(split_seen_classes(seen, 0.0, 0, 1), Error);
}

TEST_CASE("fold datasets use only seen-class training samples") {
  const Dataset ds = small_dataset();
  const auto split = split_seen_classes(ds.seen, 0.25, 0, 1);
  const Dataset sub = fold_dataset(ds, split);
  CHECK(sub.seen == split.train);
  CHECK(sub.unseen == split.validation);
  CHECK(sub.num_samples() == ds.train_indices().size());
  for (std::size_t n = 0; n < sub.num_samples(); ++n) {
    const bool validating = std::binary_search(split.validation.begin(), split.validation.end(), sub.true_labels[n]);
    CHECK((sub.labels[n] == kHiddenLabel) == validating);
  }
}

TEST_CASE("tuning ignores the true unseen classes and their features") {
  const Dataset ds = small_dataset();
  Dataset scrambled = ds;
  for (auto n : scrambled.test_indices()) scrambled.features.row(static_cast<Eigen::Index>(n)).setConstant(1e6);
  for (auto& t : scrambled.true_labels)
    if (std::binary_search(ds.unseen.begin(), ds.unseen.end(), t)) t = ds.unseen.back();
  Matrix& att = scrambled.semantic.at("att");
  att.bottomRows(2).setConstant(-3.0);

  const auto a = tune(ds, small_grid(), quick_options());
  const auto b = tune(scrambled, small_grid(), quick_options());
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].accuracy == b.table[i].accuracy);
}

TEST_CASE("a single-point grid chooses that point") {
  const Dataset ds = small_dataset();
  GridSpec g;
  g.lambdas = {0.125};
  g.gammas = {0.5};
  g.sigmas = {2.0};
  const auto result = tune(ds, g, quick_options());
  CHECK(result.chosen.lambda == 0.125);
  CHECK(result.chosen.gamma == 0.5);
  CHECK(result.chosen.sigma_image == 2.0);
  CHECK(result.chosen.sigma_for("att") == 2.0);
  std::set<std::pair<std::vector<double>, int>> distinct;
  for (const auto& row : result.table) distinct.insert({row.setting(), row.fold});
  // Stage 1 at unit bandwidths, then the image and the source bandwidth in turn, two folds each.
  CHECK(distinct.size() == 6);
}

TEST_CASE("ties go to the smallest lambda, gamma and bandwidth") {
  // With a single validation class every prediction is right, so every cell ties.
  const Dataset ds = small_dataset();
  GridSpec g;
  g.lambdas = {0.5, 0.25};
  g.gammas = {0.25, 0.125};
  g.sigmas = {2.0, 1.0};
  g.ratio = 1.0 / 6.0;
  const auto result = tune(ds, g, quick_options());
  for (const auto& row : result.table) REQUIRE(row.accuracy == 1.0);
  CHECK(result.chosen.lambda == 0.25);
  CHECK(result.chosen.gamma == 0.125);
  CHECK(result.chosen.sigma_image == 1.0);
  CHECK(result.chosen.sigma_for("att") == 1.0);
}

TEST_CASE("chosen accuracy is reproduced by re-running the chosen setting") {
  const Dataset ds = small_dataset(9);
  const auto result = tune(ds, small_grid(), quick_options());
  CHECK(cross_validate(ds, result.chosen, small_grid(), quick_options()) == result.chosen_accuracy);
  double best_stage1 = 0.0;
  for (std::size_t i = 0; i + 1 < 8; i += 2)
    best_stage1 = std::max(best_stage1, 0.5 * (result.table[i].accuracy + result.table[i + 1].accuracy));
  CHECK(result.chosen_accuracy >= best_stage1);
}

TEST_CASE("tuning resumes from a partial table with identical results") {
  const Dataset ds = small_dataset(5);
  const auto full = tune(ds, small_grid(), quick_options());
  const std::vector<CVRow> partial(full.table.begin(), full.table.begin() + 5);
  const auto resumed = tune(ds, small_grid(), quick_options(), make_cache(partial));
  CHECK(resumed.chosen_accuracy == full.chosen_accuracy);
  CHECK(resumed.chosen.lambda == full.chosen.lambda);
  CHECK(resumed.chosen.gamma == full.chosen.gamma);
  REQUIRE(resumed.table.size() == full.table.size());
  for (std::size_t i = 0; i < full.table.size(); ++i) CHECK(resumed.table[i].accuracy == full.table[i].accuracy);
}

TEST_CASE("a misleading image graph pushes the chosen alignment weight up the grid") {
  // Seen centroids unrelated to the unseen ones make the image graph noise,
  // while the semantic source stays informative.
  SynthParams p;
  p.seen = 12;
  p.unseen = 4;
  p.dim = 16;
  p.image_noise = 0.5;
  p.seen_between_unseen = false;
  p.sources = {{"att", 8, 0.3}};
  p.seed = 6;
  const Dataset ds = generate_synthetic(p);
  GridSpec g;
  g.lambdas = {std::ldexp(1.0, -16)};
  g.gammas = GridSpec::powers_of_two(-24, 4, 4);
  g.sigmas = {8.0};
  PropagationOptions o;
  o.fusion.sources = {"att"};
  const auto result = tune(ds, g, o);
  CHECK(result.chosen.gamma >= g.gammas[g.gammas.size() / 2]);
}

TEST_CASE("tables and params survive a file round trip") {
  const auto dir = test_support::scratch_dir("cv_io");
  std::vector<CVRow> rows(2);
  rows[0] = {std::ldexp(1.0, -20), 0.1, 2.0, {0.5, 4.0}, 0, 0.875};
  rows[1] = {std::ldexp(1.0, -9), 1.0 / 3.0, 32.0, {0.03125, 1.0}, 1, 2.0 / 3.0};
  const std::vector<std::string> sources{"att", "w2v"};
  write_cv_table(dir / "t.csv", rows, sources);
  const auto back = read_cv_table(dir / "t.csv", sources);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].setting() == rows[i].setting());
    CHECK(back[i].fold == rows[i].fold);
    CHECK(back[i].accuracy == rows[i].accuracy);
  }
  CHECK(test_support::read_file(dir / "t.csv").rfind("lambda,gamma,sigma_image,sigma_att,sigma_w2v,fold,accuracy\n", 0) == 0);
  const std::vector<std::string> other{"att"};
  CHECK_THROWS_AS(read_cv_table(dir / "t.csv", other), Error);

  Hyperparams p;
  p.lambda = std::ldexp(1.0, -17);
  p.gamma = 0.3;
  p.sigma_image = 0.0625;
  p.sigma_sources = {{"att", 8.0}, {"hie", 0.5}};
  write_params(dir / "p.json", p, 0.75);
  const Hyperparams q = read_params(dir / "p.json");
  CHECK(q.lambda == p.lambda);
  CHECK(q.gamma == p.gamma);
  CHECK(q.sigma_image == p.sigma_image);
  CHECK(q.sigma_sources == p.sigma_sources);
}

TEST_CASE("grid helpers") {
  const auto g = GridSpec::defaults();
  CHECK(g.lambdas.size() == 16);
  CHECK(g.gammas.front() == std::ldexp(1.0, -24));
  CHECK(g.gammas.back() == std::ldexp(1.0, -9));
  CHECK(g.sigmas.size() == 11);
  CHECK(GridSpec::powers_of_two(-6, 0, 3) == std::vector<double>{1.0 / 64, 1.0 / 8, 1.0});
  GridSpec bad = g;
  bad.sigmas.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
}
