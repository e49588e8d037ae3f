#include "sp/core.hpp"

namespace sp {

void fail(const std::string& message) { throw Error(message); }

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace sp
