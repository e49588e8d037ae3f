#pragma once

// Reference computations used only by tests. Everything here is written
// against plain std::vector data with direct loops so that it shares no code
// path with the library it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "sp/core.hpp"
#include "sp/random.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows rows_of(const sp::Matrix& m) {
  Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

inline sp::Matrix matrix_of(const Rows& r) {
  sp::Matrix m(static_cast<Eigen::Index>(r.size()), r.empty() ? 0 : static_cast<Eigen::Index>(r[0].size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r[i].size(); ++j) m(i, j) = r[i][j];
  return m;
}

// A small problem instance in plain containers.
struct Problem {
  Rows X;                    // N x D
  std::vector<int> y;        // seen index per sample
  std::vector<Rows> graphs;  // k graphs, each S x U
  int S = 0;
  int U = 0;
  int D = 0;
  double lambda = 1.0;
  double gamma = 0.0;
  bool image_slot = true;
  bool squared = true;
};

// Seen classifiers a_s = sum_u (sum_g beta_g W_g[s][u]) v_u.
inline Rows seen_classifiers(const Problem& p, const Rows& V, const std::vector<double>& beta) {
  Rows A(p.S, std::vector<double>(p.D, 0.0));
  for (int s = 0; s < p.S; ++s)
    for (int u = 0; u < p.U; ++u) {
      double w = 0.0;
      for (std::size_t g = 0; g < p.graphs.size(); ++g) w += beta[g] * p.graphs[g][s][u];
      for (int d = 0; d < p.D; ++d) A[s][d] += w * V[u][d];
    }
  return A;
}

inline double objective(const Problem& p, const Rows& V, const std::vector<double>& beta) {
  const Rows A = seen_classifiers(p, V, beta);
  double hinge = 0.0;
  for (int s = 0; s < p.S; ++s)
    for (std::size_t n = 0; n < p.X.size(); ++n) {
      double z = 0.0;
      for (int d = 0; d < p.D; ++d) z += A[s][d] * p.X[n][d];
      const double target = p.y[n] == s ? 1.0 : -1.0;
      const double m = std::max(0.0, 1.0 - target * z);
      hinge += p.squared ? m * m : m;
    }
  double ridge = 0.0;
  for (const auto& row : A)
    for (double a : row) ridge += a * a;
  // Without an image slot every graph is a source and the image graph is zero.
  double align = 0.0;
  const std::size_t first_source = p.image_slot ? 1 : 0;
  for (int s = 0; s < p.S; ++s)
    for (int u = 0; u < p.U; ++u) {
      double r = p.image_slot ? beta[0] * p.graphs[0][s][u] : 0.0;
      for (std::size_t g = first_source; g < p.graphs.size(); ++g) r -= beta[g] * p.graphs[g][s][u];
      align += r * r;
    }
  return hinge + 0.5 * p.lambda * ridge + 0.5 * p.gamma * align;
}

// Central difference of f at x along every coordinate.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

// Cyclic coordinate descent on V for fixed beta. Each coordinate is minimized
// exactly by bisection on the (monotone) derivative of the convex 1-D
// restriction; stops when a sweep changes no coordinate by more than `tol`.
inline Rows coordinate_descent_V(const Problem& p, const std::vector<double>& beta, Rows V, double tol = 1e-12,
                                 int max_sweeps = 20000) {
  Rows B(p.S, std::vector<double>(p.U, 0.0));
  for (int s = 0; s < p.S; ++s)
    for (int u = 0; u < p.U; ++u)
      for (std::size_t g = 0; g < p.graphs.size(); ++g) B[s][u] += beta[g] * p.graphs[g][s][u];

  const auto N = p.X.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double biggest = 0.0;
    for (int u = 0; u < p.U; ++u)
      for (int d = 0; d < p.D; ++d) {
        const Rows A = seen_classifiers(p, V, beta);
        // Scores and their slope along this coordinate.
        std::vector<double> z(N * p.S), slope(N * p.S);
        for (std::size_t n = 0; n < N; ++n)
          for (int s = 0; s < p.S; ++s) {
            double acc = 0.0;
            for (int e = 0; e < p.D; ++e) acc += A[s][e] * p.X[n][e];
            z[n * p.S + s] = acc;
            slope[n * p.S + s] = B[s][u] * p.X[n][d];
          }
        const auto derivative = [&](double t) {
          double g = 0.0;
          for (std::size_t n = 0; n < N; ++n)
            for (int s = 0; s < p.S; ++s) {
              const double target = p.y[n] == s ? 1.0 : -1.0;
              const double m = 1.0 - target * (z[n * p.S + s] + t * slope[n * p.S + s]);
              if (m > 0.0) g += p.squared ? -2.0 * target * m * slope[n * p.S + s] : -target * slope[n * p.S + s];
            }
          for (int s = 0; s < p.S; ++s) g += p.lambda * (A[s][d] + t * B[s][u]) * B[s][u];
          return g;
        };
        double lo = -1.0, hi = 1.0;
        while (derivative(lo) > 0.0 && lo > -1e12) lo *= 2.0;
        while (derivative(hi) < 0.0 && hi < 1e12) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
          const double mid = 0.5 * (lo + hi);
          (derivative(mid) > 0.0 ? hi : lo) = mid;
        }
        const double step = 0.5 * (lo + hi);
        // Degenerate coordinates (zero weight column) have a flat restriction.
        if (std::abs(derivative(0.0)) == 0.0) continue;
        V[u][d] += step;
        biggest = std::max(biggest, std::abs(step));
      }
    if (biggest < tol) break;
  }
  return V;
}

// Solves the dense system M x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> M, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(M[r][c]) > std::abs(M[pivot][c])) pivot = r;
    std::swap(M[c], M[pivot]);
    std::swap(b[c], b[pivot]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = M[r][c] / M[c][c];
      for (std::size_t k = c; k < n; ++k) M[r][k] -= f * M[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= M[i][k] * x[k];
    x[i] = acc / M[i][i];
  }
  return x;
}

// Damped Newton on V for fixed beta with the squared hinge, using the
// generalized Hessian of the active margins and a halving line search.
// Stops once a step no longer lowers the objective.
inline Rows newton_V(const Problem& p, const std::vector<double>& beta, Rows V, int max_steps = 500) {
  Rows B(p.S, std::vector<double>(p.U, 0.0));
  for (int s = 0; s < p.S; ++s)
    for (int u = 0; u < p.U; ++u)
      for (std::size_t g = 0; g < p.graphs.size(); ++g) B[s][u] += beta[g] * p.graphs[g][s][u];
  const auto n = static_cast<std::size_t>(p.U * p.D);
  const auto at = [&](int u, int d) { return static_cast<std::size_t>(u * p.D + d); };

  double f = objective(p, V, beta);
  for (int step = 0; step < max_steps; ++step) {
    const Rows A = seen_classifiers(p, V, beta);
    std::vector<double> grad(n, 0.0);
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    for (int s = 0; s < p.S; ++s) {
      for (int u = 0; u < p.U; ++u)
        for (int d = 0; d < p.D; ++d) {
          grad[at(u, d)] += p.lambda * A[s][d] * B[s][u];
          for (int w = 0; w < p.U; ++w) H[at(u, d)][at(w, d)] += p.lambda * B[s][u] * B[s][w];
        }
      for (std::size_t i = 0; i < p.X.size(); ++i) {
        double z = 0.0;
        for (int d = 0; d < p.D; ++d) z += A[s][d] * p.X[i][d];
        const double target = p.y[i] == s ? 1.0 : -1.0;
        const double m = 1.0 - target * z;
        if (m <= 0.0) continue;
        for (int u = 0; u < p.U; ++u)
          for (int d = 0; d < p.D; ++d) {
            const double ju = B[s][u] * p.X[i][d];
            grad[at(u, d)] -= 2.0 * target * m * ju;
            for (int w = 0; w < p.U; ++w)
              for (int e = 0; e < p.D; ++e) H[at(u, d)][at(w, e)] += 2.0 * ju * B[s][w] * p.X[i][e];
          }
      }
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, H[i][i]);
    for (std::size_t i = 0; i < n; ++i) H[i][i] += 1e-12 * std::max(scale, 1.0);
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -grad[i];
    const std::vector<double> dir = solve_dense(H, neg);

    bool improved = false;
    for (double t = 1.0; t > 1e-12; t *= 0.5) {
      Rows trial = V;
      for (int u = 0; u < p.U; ++u)
        for (int d = 0; d < p.D; ++d) trial[u][d] += t * dir[at(u, d)];
      const double ft = objective(p, trial, beta);
      if (ft < f) {
        improved = f - ft > 0.0;
        V = trial;
        f = ft;
        break;
      }
    }
    if (!improved) break;
  }
  return V;
}

// Projected simplex grid for k = 2: beta = (i * step, 1 - i * step).
inline std::vector<std::vector<double>> beta_grid_2(double step = 1e-3) {
  std::vector<std::vector<double>> grid;
  const int count = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= count; ++i) {
    const double b = static_cast<double>(i) / count;
    grid.push_back({b, 1.0 - b});
  }
  return grid;
}

// Row-stochastic random matrix with strictly positive entries.
inline Rows random_stochastic(sp::Rng& rng, int rows, int cols) {
  Rows W(rows, std::vector<double>(cols));
  for (auto& row : W) {
    double total = 0.0;
    for (auto& w : row) {
      w = 0.05 + rng.uniform();
      total += w;
    }
    for (auto& w : row) w /= total;
  }
  return W;
}

}  // namespace oracle

namespace oracle {

struct JointOptimum {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> beta;
  Rows V;
};

// Global search for two weights: every beta on the grid, each with V solved
// tightly from the previous grid point's V. The squared hinge uses damped
// Newton; the plain hinge falls back to coordinate descent.
inline JointOptimum joint_search_two_weights(const Problem& p, double step = 1e-3, double tol = 1e-12) {
  JointOptimum best;
  Rows V(p.U, std::vector<double>(p.D, 0.0));
  for (const auto& beta : beta_grid_2(step)) {
    V = p.squared ? newton_V(p, beta, V) : coordinate_descent_V(p, beta, V, tol);
    const double f = objective(p, V, beta);
    if (f < best.value) {
      best.value = f;
      best.beta = beta;
      best.V = V;
    }
  }
  return best;
}

}  // namespace oracle
