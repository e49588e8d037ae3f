#pragma once

#include <span>

#include "sp/core.hpp"

namespace sp {

// Euclidean projection onto the probability simplex over the coordinates
// flagged in `free` (all coordinates when empty); the others are set to 0.
Vector project_to_simplex(const Vector& v, std::span<const char> free = {});

// Exact minimizer of 0.5 b'Hb + g'b over the simplex on the free coordinates,
// for symmetric positive semidefinite H. Every face of the simplex is solved
// through its KKT system and the best feasible point wins; beyond
// kMaxEnumeratedCoordinates free coordinates a projected-gradient loop is used.
Vector minimize_quadratic_on_simplex(const Matrix& H, const Vector& g, std::span<const char> free = {});

inline constexpr int kMaxEnumeratedCoordinates = 12;

}  // namespace sp
