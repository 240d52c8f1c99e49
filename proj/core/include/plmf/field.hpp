#pragma once

#include <cstddef>
#include <vector>

namespace plmf {

// Square row-major image. values.size() == side * side.
struct Field2d {
  std::size_t side = 0;
  std::vector<double> values;

  Field2d() = default;
  explicit Field2d(std::size_t s, double fill = 0.0) : side(s), values(s * s, fill) {}

  double& operator()(std::size_t row, std::size_t col) { return values[row * side + col]; }
  double operator()(std::size_t row, std::size_t col) const { return values[row * side + col]; }
};

}  // namespace plmf
