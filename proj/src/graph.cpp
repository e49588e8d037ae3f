#include "sp/graph.hpp"

#include <cmath>
#include <limits>

#include "sp/csv.hpp"
#include "sp/kernels.hpp"

namespace sp {

double scaled_distance(std::span<const double> p, std::span<const double> q, double sigma) {
  require(p.size() == q.size(), "scaled_distance: dimension mismatch");
  require(sigma > 0.0 && std::isfinite(sigma), "scaled_distance: sigma must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - q[i];
    acc += diff * diff;
  }
  return acc / sigma;
}

Matrix softmax_rows(const Matrix& distances, std::span<const char> mask) {
  require(mask.empty() || static_cast<Eigen::Index>(mask.size()) == distances.cols(), "softmax_rows: mask length mismatch");
  const auto defined = [&](Eigen::Index u) { return mask.empty() || mask[static_cast<std::size_t>(u)]; };
  Matrix out = Matrix::Zero(distances.rows(), distances.cols());
  for (Eigen::Index s = 0; s < distances.rows(); ++s) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index u = 0; u < distances.cols(); ++u)
      if (defined(u)) top = std::max(top, -distances(s, u));
    double total = 0.0;
    for (Eigen::Index u = 0; u < distances.cols(); ++u) {
      if (!defined(u)) continue;
      out(s, u) = std::exp(-distances(s, u) - top);
      total += out(s, u);
    }
    for (Eigen::Index u = 0; u < distances.cols(); ++u) out(s, u) /= total;
  }
  return out;
}

SimilarityGraph similarity_graph(const Matrix& seen_prototypes, const Matrix& unseen_prototypes, double sigma,
                                 std::span<const char> defined_mask, SpaceKind space, std::string source) {
  require(sigma > 0.0 && std::isfinite(sigma), "similarity_graph: sigma must be positive");
  require(seen_prototypes.cols() == unseen_prototypes.cols(), "similarity_graph: prototype dimension mismatch");
  require(seen_prototypes.rows() >= 1 && unseen_prototypes.rows() >= 1, "similarity_graph: empty prototype set");

  SimilarityGraph g;
  g.space = space;
  g.source = std::move(source);
  g.sigma = sigma;
  if (defined_mask.empty()) {
    g.defined.assign(static_cast<std::size_t>(unseen_prototypes.rows()), 1);
  } else {
    require(static_cast<Eigen::Index>(defined_mask.size()) == unseen_prototypes.rows(),
            "similarity_graph: mask length mismatch");
    g.defined.assign(defined_mask.begin(), defined_mask.end());
  }
  if (std::find(g.defined.begin(), g.defined.end(), 1) == g.defined.end()) {
    fail("similarity_graph: all unseen prototypes are undefined");
  }

  Matrix distances;
  kernels::pairwise_sq_dist(seen_prototypes, unseen_prototypes, distances);
  distances /= sigma;
  g.weights = softmax_rows(distances, g.defined);
  return g;
}

SimilarityGraph similarity_graph(const ClassPrototypes& seen, const ClassPrototypes& unseen, double sigma) {
  require(seen.num_present() == seen.classes.size(), "similarity_graph: every seen prototype must be defined");
  return similarity_graph(seen.vectors, unseen.vectors, sigma, unseen.present, unseen.space, unseen.source);
}

SimilarityGraph zero_graph(Eigen::Index num_seen, Eigen::Index num_unseen) {
  require(num_seen >= 1 && num_unseen >= 1, "zero_graph: counts must be positive");
  SimilarityGraph g;
  g.space = SpaceKind::image;
  g.weights = Matrix::Zero(num_seen, num_unseen);
  g.defined.assign(static_cast<std::size_t>(num_unseen), 0);
  g.zero_init = true;
  return g;
}

void write_graph_csv(const std::filesystem::path& path, const SimilarityGraph& graph,
                     std::span<const ClassId> unseen_ids) {
  require(static_cast<Eigen::Index>(unseen_ids.size()) == graph.num_unseen(), "write_graph_csv: id count mismatch");
  std::string out;
  for (std::size_t u = 0; u < unseen_ids.size(); ++u) {
    if (u) out += ',';
    out += std::to_string(unseen_ids[u]);
  }
  out += '\n';
  for (Eigen::Index s = 0; s < graph.num_seen(); ++s) {
    for (Eigen::Index u = 0; u < graph.num_unseen(); ++u) {
      if (u) out += ',';
      out += csv::format(graph.weights(s, u));
    }
    out += '\n';
  }
  csv::write_text(path, out);
}

}  // namespace sp
