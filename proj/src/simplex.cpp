#include "sp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace sp {

namespace {

std::vector<Eigen::Index> free_indices(Eigen::Index n, std::span<const char> free) {
  require(free.empty() || static_cast<Eigen::Index>(free.size()) == n, "simplex: mask length mismatch");
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (free.empty() || free[static_cast<std::size_t>(i)]) idx.push_back(i);
  require(!idx.empty(), "simplex: no free coordinates");
  return idx;
}

double quadratic_value(const Matrix& H, const Vector& g, const Vector& b) {
  return 0.5 * b.dot(H * b) + g.dot(b);
}

Vector projected_gradient(const Matrix& H, const Vector& g, std::span<const char> free) {
  const Eigen::Index n = g.size();
  Vector b = project_to_simplex(Vector::Constant(n, 1.0), free);
  const double lipschitz = std::max(H.operatorNorm(), 1e-12);
  for (int it = 0; it < 20000; ++it) {
    const Vector next = project_to_simplex(b - (H * b + g) / lipschitz, free);
    const double change = (next - b).lpNorm<Eigen::Infinity>();
    b = next;
    if (change < 1e-15) break;
  }
  return b;
}

}  // namespace

Vector project_to_simplex(const Vector& v, std::span<const char> free) {
  const auto idx = free_indices(v.size(), free);
  std::vector<double> sorted;
  sorted.reserve(idx.size());
  for (auto i : idx) sorted.push_back(v(i));
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) threshold = candidate;
  }

  Vector out = Vector::Zero(v.size());
  double total = 0.0;
  for (auto i : idx) {
    out(i) = std::max(v(i) - threshold, 0.0);
    total += out(i);
  }
  // Absorb rounding so the result sums to 1 to machine precision.
  if (total > 0.0) {
    for (auto i : idx) out(i) /= total;
  }
  return out;
}

Vector minimize_quadratic_on_simplex(const Matrix& H, const Vector& g, std::span<const char> free) {
  const Eigen::Index n = g.size();
  require(H.rows() == n && H.cols() == n, "minimize_quadratic_on_simplex: shape mismatch");
  const auto idx = free_indices(n, free);
  const auto m = idx.size();
  if (m > static_cast<std::size_t>(kMaxEnumeratedCoordinates)) return projected_gradient(H, g, free);

  Vector best;
  double best_value = std::numeric_limits<double>::infinity();
  const std::uint32_t faces = (1u << m);
  for (std::uint32_t face = 1; face < faces; ++face) {
    std::vector<Eigen::Index> support;
    for (std::size_t j = 0; j < m; ++j)
      if (face & (1u << j)) support.push_back(idx[j]);
    const auto f = static_cast<Eigen::Index>(support.size());

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f + 1, f + 1);
    Eigen::VectorXd rhs(f + 1);
    for (Eigen::Index a = 0; a < f; ++a) {
      for (Eigen::Index b = 0; b < f; ++b) kkt(a, b) = H(support[a], support[b]);
      kkt(a, f) = 1.0;
      kkt(f, a) = 1.0;
      rhs(a) = -g(support[a]);
    }
    rhs(f) = 1.0;
    const Eigen::VectorXd z = kkt.completeOrthogonalDecomposition().solve(rhs);
    const double residual = (kkt * z - rhs).norm();
    if (!z.allFinite() || residual > 1e-9 * (1.0 + rhs.norm() + kkt.norm() * z.norm())) continue;

    Vector candidate = Vector::Zero(n);
    bool feasible = true;
    for (Eigen::Index a = 0; a < f; ++a) {
      if (z(a) < -1e-12) {
        feasible = false;
        break;
      }
      candidate(support[a]) = std::max(z(a), 0.0);
    }
    if (!feasible) continue;
    candidate /= candidate.sum();
    const double value = quadratic_value(H, g, candidate);
    if (value < best_value) {
      best_value = value;
      best = candidate;
    }
  }
  // Vertices always solve their one-point KKT systems, so best is set.
  return best;
}

}  // namespace sp
