#include "sp/crossval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "sp/csv.hpp"

namespace sp {

namespace {

struct Fold {
  FoldSplit split;
  Task task;
  std::vector<ClassId> truth;  // aligned with task.test_rows
};

std::vector<Fold> make_folds(const Dataset& dataset, const GridSpec& grid) {
  const double ratio = grid.ratio > 0.0
                           ? grid.ratio
                           : static_cast<double>(dataset.num_unseen()) /
                                 static_cast<double>(dataset.num_seen() + dataset.num_unseen());
  std::vector<Fold> folds;
  for (int f = 0; f < grid.fold_count; ++f) {
    Fold fold;
    fold.split = split_seen_classes(dataset.seen, ratio, f, grid.seed);
    const auto sub = fold_dataset(dataset, fold.split);
    fold.task = make_task(sub);
    for (auto n : fold.task.test_rows) fold.truth.push_back(sub.true_labels[n]);
    folds.push_back(std::move(fold));
  }
  return folds;
}

Hyperparams params_from_setting(const std::vector<double>& setting, const FusionSpec& fusion) {
  Hyperparams p;
  p.lambda = setting[0];
  p.gamma = setting[1];
  p.sigma_image = setting[2];
  for (std::size_t j = 0; j < fusion.sources.size(); ++j) p.sigma_sources[fusion.sources[j]] = setting[3 + j];
  return p;
}

std::vector<double> setting_of(const Hyperparams& p, const FusionSpec& fusion) {
  std::vector<double> s{p.lambda, p.gamma, p.sigma_image};
  for (const auto& name : fusion.sources) s.push_back(p.sigma_for(name));
  return s;
}

// Evaluates each setting on every fold, reusing cached rows; appends the rows
// to `table` in (setting, fold) order and returns the per-setting means.
std::vector<double> evaluate_settings(const std::vector<std::vector<double>>& settings, const std::vector<Fold>& folds,
                                      const PropagationOptions& options, CVCache& cache, std::vector<CVRow>& table) {
  const auto fold_count = folds.size();
  const auto job_count = settings.size() * fold_count;
  std::vector<double> accuracy(job_count, 0.0);
  std::vector<char> pending(job_count, 0);
  for (std::size_t j = 0; j < job_count; ++j) {
    auto it = cache.find({settings[j / fold_count], static_cast<int>(j % fold_count)});
    if (it != cache.end()) {
      accuracy[j] = it->second;
    } else {
      pending[j] = 1;
    }
  }

  std::vector<std::string> errors(job_count);
  const auto jobs = static_cast<std::ptrdiff_t>(job_count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < jobs; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    if (!pending[idx]) continue;
    try {
      const auto& fold = folds[idx % fold_count];
      const auto params = params_from_setting(settings[idx / fold_count], options.fusion);
      const auto state = propagate(fold.task, params, options);
      accuracy[idx] = evaluate(state.predicted, fold.truth, fold.split.validation).mean_accuracy;
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& message : errors)
    if (!message.empty()) fail("cross-validation run failed: " + message);

  std::vector<double> means(settings.size(), 0.0);
  for (std::size_t s = 0; s < settings.size(); ++s) {
    double total = 0.0;
    for (std::size_t f = 0; f < fold_count; ++f) {
      const auto j = s * fold_count + f;
      total += accuracy[j];
      cache[{settings[s], static_cast<int>(f)}] = accuracy[j];
      CVRow row;
      row.lambda = settings[s][0];
      row.gamma = settings[s][1];
      row.sigma_image = settings[s][2];
      row.sigma_sources.assign(settings[s].begin() + 3, settings[s].end());
      row.fold = static_cast<int>(f);
      row.accuracy = accuracy[j];
      table.push_back(std::move(row));
    }
    means[s] = total / static_cast<double>(fold_count);
  }
  return means;
}

// First index attaining the maximum; callers order candidates so the first is the tie winner.
std::size_t first_best(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> sorted_grid(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace

std::vector<double> GridSpec::powers_of_two(int lo, int hi, int stride) {
  require(stride >= 1, "grid stride must be positive");
  require(lo <= hi, "grid exponent range is empty");
  std::vector<double> out;
  for (int e = lo; e <= hi; e += stride) out.push_back(std::ldexp(1.0, e));
  return out;
}

GridSpec GridSpec::defaults() {
  GridSpec g;
  g.lambdas = powers_of_two(-24, -9);
  g.gammas = powers_of_two(-24, -9);
  g.sigmas = powers_of_two(-5, 5);
  return g;
}

void GridSpec::validate() const {
  require(!lambdas.empty() && !gammas.empty() && !sigmas.empty(), "grid: every grid must be nonempty");
  for (auto v : lambdas) require(v > 0.0, "grid: lambda values must be positive");
  for (auto v : gammas) require(v > 0.0, "grid: gamma values must be positive");
  for (auto v : sigmas) require(v > 0.0, "grid: sigma values must be positive");
  require(fold_count >= 1, "grid: fold count must be positive");
  require(ratio >= 0.0 && ratio < 1.0, "grid: ratio must lie in (0, 1)");
}

std::vector<double> CVRow::setting() const {
  std::vector<double> s{lambda, gamma, sigma_image};
  s.insert(s.end(), sigma_sources.begin(), sigma_sources.end());
  return s;
}

FoldSplit split_seen_classes(std::span<const ClassId> seen, double ratio, int fold_index, std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, "split: ratio must lie in (0, 1)");
  require(fold_index >= 0, "split: fold index must be nonnegative");
  const auto S = seen.size();
  const auto n_val = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(S)));
  if (n_val == 0 || n_val >= S) fail("split: ratio yields an empty side");

  std::vector<ClassId> order(seen.begin(), seen.end());
  std::sort(order.begin(), order.end());
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  std::vector<char> held(S, 0);
  const auto start = (static_cast<std::size_t>(fold_index) * n_val) % S;
  for (std::size_t i = 0; i < n_val; ++i) held[(start + i) % S] = 1;

  FoldSplit split;
  for (std::size_t i = 0; i < S; ++i) (held[i] ? split.validation : split.train).push_back(order[i]);
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

Dataset fold_dataset(const Dataset& dataset, const FoldSplit& split) {
  Dataset sub;
  sub.seen = split.train;
  sub.unseen = split.validation;
  std::vector<std::size_t> rows;
  for (auto n : dataset.train_indices()) rows.push_back(n);
  sub.features.resize(static_cast<Eigen::Index>(rows.size()), dataset.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto n = rows[i];
    const auto id = dataset.labels[n];
    sub.features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(static_cast<Eigen::Index>(n));
    const bool validating = std::binary_search(split.validation.begin(), split.validation.end(), id);
    require(validating || std::binary_search(split.train.begin(), split.train.end(), id),
            "fold split does not cover seen class " + std::to_string(id));
    sub.labels.push_back(validating ? kHiddenLabel : id);
    sub.true_labels.push_back(id);
  }
  for (const auto& [name, table] : dataset.semantic) {
    Matrix t(static_cast<Eigen::Index>(sub.seen.size() + sub.unseen.size()), table.cols());
    Eigen::Index r = 0;
    for (const auto* group : {&sub.seen, &sub.unseen})
      for (auto id : *group) t.row(r++) = table.row(static_cast<Eigen::Index>(*dataset.seen_index(id)));
    sub.semantic[name] = std::move(t);
  }
  sub.validate();
  return sub;
}

CVCache make_cache(std::span<const CVRow> rows) {
  CVCache cache;
  for (const auto& row : rows) cache[{row.setting(), row.fold}] = row.accuracy;
  return cache;
}

double cross_validate(const Dataset& dataset, const Hyperparams& params, const GridSpec& grid,
                      const PropagationOptions& options) {
  const auto folds = make_folds(dataset, grid);
  CVCache cache;
  std::vector<CVRow> table;
  return evaluate_settings({setting_of(params, options.fusion)}, folds, options, cache, table).front();
}

CVResult tune(const Dataset& dataset, const GridSpec& grid_in, const PropagationOptions& options,
              const CVCache& prior) {
  grid_in.validate();
  options.validate();
  GridSpec grid = grid_in;
  grid.lambdas = sorted_grid(grid.lambdas);
  grid.gammas = sorted_grid(grid.gammas);
  grid.sigmas = sorted_grid(grid.sigmas);
  for (const auto& name : options.fusion.sources)
    if (!dataset.semantic.count(name)) fail("unknown source name: " + name);

  const auto folds = make_folds(dataset, grid);
  CVCache cache = prior;
  CVResult result;
  const auto source_count = options.fusion.sources.size();

  // Stage 1: every bandwidth at 1.
  std::vector<std::vector<double>> stage1;
  for (auto lambda : grid.lambdas) {
    for (auto gamma : grid.gammas) {
      std::vector<double> s{lambda, gamma, 1.0};
      s.resize(3 + source_count, 1.0);
      stage1.push_back(std::move(s));
    }
  }
  const auto means1 = evaluate_settings(stage1, folds, options, cache, result.table);
  auto best_index = first_best(means1);
  std::vector<double> best = stage1[best_index];
  double best_accuracy = means1[best_index];

  // Stage 2: bandwidth search with (lambda, gamma) fixed.
  std::vector<std::size_t> slots;
  if (options.fusion.include_image) slots.push_back(2);
  for (std::size_t j = 0; j < source_count; ++j) slots.push_back(3 + j);

  if (grid.full_sigma_product) {
    std::vector<std::vector<double>> stage2{best};
    for (auto slot : slots) {
      std::vector<std::vector<double>> expanded;
      for (const auto& partial : stage2) {
        for (auto sigma : grid.sigmas) {
          auto s = partial;
          s[slot] = sigma;
          expanded.push_back(std::move(s));
        }
      }
      stage2 = std::move(expanded);
    }
    const auto means2 = evaluate_settings(stage2, folds, options, cache, result.table);
    best_index = first_best(means2);
    best = stage2[best_index];
    best_accuracy = means2[best_index];
  } else {
    for (auto slot : slots) {
      std::vector<std::vector<double>> candidates;
      for (auto sigma : grid.sigmas) {
        auto s = best;
        s[slot] = sigma;
        candidates.push_back(std::move(s));
      }
      const auto means2 = evaluate_settings(candidates, folds, options, cache, result.table);
      best_index = first_best(means2);
      best = candidates[best_index];
      best_accuracy = means2[best_index];
    }
  }

  result.chosen = params_from_setting(best, options.fusion);
  result.chosen_accuracy = best_accuracy;
  return result;
}

void write_cv_table(const std::filesystem::path& path, std::span<const CVRow> rows,
                    std::span<const std::string> sources) {
  std::string out = "lambda,gamma,sigma_image";
  for (const auto& name : sources) out += ",sigma_" + name;
  out += ",fold,accuracy\n";
  for (const auto& row : rows) {
    require(row.sigma_sources.size() == sources.size(), "cv table: source count mismatch");
    out += csv::format(row.lambda) + "," + csv::format(row.gamma) + "," + csv::format(row.sigma_image);
    for (auto s : row.sigma_sources) out += "," + csv::format(s);
    out += "," + std::to_string(row.fold) + "," + csv::format(row.accuracy) + "\n";
  }
  csv::write_text(path, out);
}

std::vector<CVRow> read_cv_table(const std::filesystem::path& path, std::span<const std::string> sources) {
  const std::string text = csv::read_text(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<CVRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_fields(line);
    if (line_no == 1) {
      std::vector<std::string> expected{"lambda", "gamma", "sigma_image"};
      for (const auto& name : sources) expected.push_back("sigma_" + name);
      expected.push_back("fold");
      expected.push_back("accuracy");
      bool match = fields.size() == expected.size();
      for (std::size_t i = 0; match && i < fields.size(); ++i) match = fields[i] == expected[i];
      if (!match) fail("cv table header does not match the configured sources: " + path.string());
      continue;
    }
    if (fields.size() != 5 + sources.size()) fail("malformed cv table row " + std::to_string(line_no));
    CVRow row;
    row.lambda = csv::parse_double(fields[0], path, line_no);
    row.gamma = csv::parse_double(fields[1], path, line_no);
    row.sigma_image = csv::parse_double(fields[2], path, line_no);
    for (std::size_t j = 0; j < sources.size(); ++j)
      row.sigma_sources.push_back(csv::parse_double(fields[3 + j], path, line_no));
    row.fold = static_cast<int>(csv::parse_id(fields[3 + sources.size()], path, line_no));
    row.accuracy = csv::parse_double(fields[4 + sources.size()], path, line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_params(const std::filesystem::path& path, const Hyperparams& params, double accuracy) {
  nlohmann::ordered_json j;
  j["lambda"] = params.lambda;
  j["gamma"] = params.gamma;
  j["sigma_image"] = params.sigma_image;
  j["sigma_sources"] = nlohmann::ordered_json::object();
  for (const auto& [name, sigma] : params.sigma_sources) j["sigma_sources"][name] = sigma;
  j["validation_accuracy"] = accuracy;
  csv::write_text(path, j.dump(2) + "\n");
}

Hyperparams read_params(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    fail("malformed params file " + path.string() + ": " + e.what());
  }
  Hyperparams p;
  try {
    p.lambda = j.at("lambda").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.sigma_image = j.at("sigma_image").get<double>();
    if (j.contains("sigma_sources"))
      for (const auto& [name, value] : j.at("sigma_sources").items()) p.sigma_sources[name] = value.get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail("malformed params file " + path.string() + ": " + e.what());
  }
  p.validate();
  return p;
}

}  // namespace sp
