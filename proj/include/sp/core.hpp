#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sp {

// Row-major throughout: per-sample and per-class rows are contiguous, which is
// what every kernel in kernels.hpp iterates over.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Opaque class identifier as it appears in the dataset files.
using ClassId = std::int64_t;

// Marks a sample whose label is withheld from the solver.
inline constexpr ClassId kHiddenLabel = -1;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(message);
}

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

}  // namespace sp
