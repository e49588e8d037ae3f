#include "doctest.h"

#include <cmath>
#include <vector>

#include "sp/random.hpp"
#include "sp/simplex.hpp"

using namespace sp;

namespace {

// Projection by bisection on the threshold tau with sum(max(v - tau, 0)) = 1.
Vector bisection_projection(const Vector& v) {
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((v.array() - mid).max(0.0).sum() > 1.0 ? lo : hi) = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

double quad(const Matrix& H, const Vector& g, const Vector& b) { return 0.5 * b.dot(H * b) + g.dot(b); }

}  // namespace

TEST_CASE("projection matches a threshold bisection") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(7));
    Vector v(k);
    for (int i = 0; i < k; ++i) v(i) = rng.normal() * 2.0;
    const Vector p = project_to_simplex(v);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(p.minCoeff() >= 0.0);
    CHECK((p - bisection_projection(v)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("projection respects pinned coordinates") {
  Vector v(3);
  v << 5.0, 0.2, 0.4;
  const std::vector<char> free{0, 1, 1};
  const Vector p = project_to_simplex(v, free);
  CHECK(p(0) == 0.0);
  CHECK(p(1) == doctest::Approx(0.4));
  CHECK(p(2) == doctest::Approx(0.6));
}

TEST_CASE("a point already on the simplex is a fixed point") {
  Vector v(4);
  v << 0.1, 0.2, 0.3, 0.4;
  CHECK((project_to_simplex(v) - v).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("simplex QP matches a fine grid for three coordinates") {
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    Matrix R(3, 3);
    for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = rng.normal();
    Matrix H = R.transpose() * R;
    if (trial % 4 == 0) H.row(2).setZero(), H.col(2).setZero();  // semidefinite case
    Vector g(3);
    for (int i = 0; i < 3; ++i) g(i) = rng.normal() * 2.0;
    const Vector b = minimize_quadratic_on_simplex(H, g);
    CHECK(std::abs(b.sum() - 1.0) <= 1e-12);
    CHECK(b.minCoeff() >= 0.0);

    double best = 1e300;
    const int steps = 400;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; i + j <= steps; ++j) {
        Vector c(3);
        c << double(i) / steps, double(j) / steps, double(steps - i - j) / steps;
        best = std::min(best, quad(H, g, c));
      }
    CHECK(quad(H, g, b) <= best + 1e-12);
  }
}

TEST_CASE("simplex QP on pinned coordinates leaves them at zero") {
  Matrix H = Matrix::Identity(3, 3);
  Vector g(3);
  g << -10.0, 0.0, 0.0;
  const std::vector<char> free{0, 1, 1};
  const Vector b = minimize_quadratic_on_simplex(H, g, free);
  CHECK(b(0) == 0.0);
  CHECK(b(1) == doctest::Approx(0.5));
  CHECK(b(2) == doctest::Approx(0.5));
}
