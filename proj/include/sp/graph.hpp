#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sp/core.hpp"
#include "sp/data.hpp"

namespace sp {

// Bipartite seen-to-unseen similarity weights for one representation space.
//
// Rows are seen classes, columns unseen classes. Each row is a softmax of
// negative scaled squared distances over the unseen classes whose prototype
// is defined; undefined columns carry weight 0. The zero graph used before
// any image structure exists is the only graph whose rows do not sum to 1.
struct SimilarityGraph {
  SpaceKind space = SpaceKind::semantic;
  std::string source;
  double sigma = 1.0;
  Matrix weights;            // S x U
  std::vector<char> defined;  // U
  bool zero_init = false;

  Eigen::Index num_seen() const { return weights.rows(); }
  Eigen::Index num_unseen() const { return weights.cols(); }
};

// (p - q)^T (p - q) / sigma, the Mahalanobis form with covariance sigma * I.
double scaled_distance(std::span<const double> p, std::span<const double> q, double sigma);

// `defined_mask` may be empty, meaning every unseen prototype is defined.
SimilarityGraph similarity_graph(const Matrix& seen_prototypes, const Matrix& unseen_prototypes, double sigma,
                                 std::span<const char> defined_mask = {}, SpaceKind space = SpaceKind::semantic,
                                 std::string source = {});

// Graph between prototype sets; columns without a present unseen prototype are masked.
SimilarityGraph similarity_graph(const ClassPrototypes& seen, const ClassPrototypes& unseen, double sigma);

SimilarityGraph zero_graph(Eigen::Index num_seen, Eigen::Index num_unseen);

// Row-wise softmax of -distances restricted to `defined` columns, computed with
// the row maximum subtracted before exponentiation. An empty mask means all columns.
Matrix softmax_rows(const Matrix& distances, std::span<const char> defined);

// CSV with a header row of unseen class ids followed by S rows of weights.
void write_graph_csv(const std::filesystem::path& path, const SimilarityGraph& graph,
                     std::span<const ClassId> unseen_ids);

}  // namespace sp
