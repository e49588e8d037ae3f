#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sp/data.hpp"
#include "sp/fusion.hpp"
#include "sp/propagation.hpp"
#include "sp/random.hpp"

namespace sp {

struct GridSpec {
  std::vector<double> lambdas;
  std::vector<double> gammas;
  std::vector<double> sigmas;
  int fold_count = 2;
  double ratio = 0.0;  // validation share of the seen classes; 0 means U / (S + U)
  std::uint64_t seed = kDefaultSeed;
  bool full_sigma_product = false;

  // 2^lo, 2^(lo+stride), ..., up to 2^hi.
  static std::vector<double> powers_of_two(int lo, int hi, int stride = 1);
  // lambda and gamma over 2^-24..2^-9, sigma over 2^-5..2^5.
  static GridSpec defaults();

  void validate() const;
};

struct FoldSplit {
  std::vector<ClassId> train;
  std::vector<ClassId> validation;
};

// Seeded partition of the seen classes with round(ratio * S) validation
// classes. Fold f validates the f-th consecutive block of a fixed shuffled
// order, so successive folds alternate which classes are held out.
FoldSplit split_seen_classes(std::span<const ClassId> seen, double ratio, int fold_index, std::uint64_t seed);

// The seen part of `dataset` re-split so that the validation classes play the
// unseen role; their samples become labeled test samples.
Dataset fold_dataset(const Dataset& dataset, const FoldSplit& split);

// One evaluated (setting, fold) pair.
struct CVRow {
  double lambda = 0.0;
  double gamma = 0.0;
  double sigma_image = 1.0;
  std::vector<double> sigma_sources;  // in fusion order
  int fold = 0;
  double accuracy = 0.0;

  std::vector<double> setting() const;
};

struct CVResult {
  Hyperparams chosen;
  double chosen_accuracy = 0.0;  // mean over folds at the chosen setting
  std::vector<CVRow> table;      // every row computed or reused, in evaluation order
};

// Previously computed rows keyed by setting and fold; lets an interrupted tune resume.
using CVCache = std::map<std::pair<std::vector<double>, int>, double>;

CVCache make_cache(std::span<const CVRow> rows);

// Stage 1 fixes every sigma at 1 and searches (lambda, gamma); stage 2 keeps
// that pair and searches the bandwidths, one space at a time unless
// `full_sigma_product` is set. Ties go to the smallest (lambda, gamma), then
// the smallest sigma.
CVResult tune(const Dataset& dataset, const GridSpec& grid, const PropagationOptions& options,
              const CVCache& cache = {});

// Mean validation accuracy of one setting over the folds.
double cross_validate(const Dataset& dataset, const Hyperparams& params, const GridSpec& grid,
                      const PropagationOptions& options);

void write_cv_table(const std::filesystem::path& path, std::span<const CVRow> rows,
                    std::span<const std::string> sources);
std::vector<CVRow> read_cv_table(const std::filesystem::path& path, std::span<const std::string> sources);

void write_params(const std::filesystem::path& path, const Hyperparams& params, double accuracy);
Hyperparams read_params(const std::filesystem::path& path);

}  // namespace sp
