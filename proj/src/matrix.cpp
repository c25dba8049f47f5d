#include "rexfuse/matrix.hpp"

#include <cmath>

namespace rexfuse {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) sum += a[f] * b[f];
  return sum;
}

double squared_norm(std::span<const double> v) { return dot(v, v); }

double Matrix::squared_norm() const { return rexfuse::squared_norm(data_); }

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace rexfuse
