#include "parcel/feature_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace parcel {

void validate_grid(const FeatureGrid& grid) {
  if (grid.height < 1 || grid.width < 1 || grid.channels < 1) {
    throw std::invalid_argument("FeatureGrid: dims must be >= 1");
  }
  const std::size_t expected =
      static_cast<std::size_t>(grid.height) * grid.width * grid.channels;
  if (grid.values.size() != expected) {
    throw std::invalid_argument("FeatureGrid: value count " +
                                std::to_string(grid.values.size()) + " != " +
                                std::to_string(expected));
  }
  for (double v : grid.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("FeatureGrid: non-finite value");
  }
}

Matrix flatten_tokens(const FeatureGrid& grid) {
  Matrix out(grid.height * grid.width, grid.channels);
  std::copy(grid.values.begin(), grid.values.end(), out.data.begin());
  return out;
}

FeatureGrid unflatten_tokens(const Matrix& tokens, int height, int width) {
  if (tokens.rows != height * width) {
    throw std::invalid_argument("unflatten_tokens: " + std::to_string(tokens.rows) +
                                " rows != " + std::to_string(height) + "x" +
                                std::to_string(width));
  }
  FeatureGrid grid(height, width, tokens.cols);
  std::copy(tokens.data.begin(), tokens.data.end(), grid.values.begin());
  return grid;
}

}  // namespace parcel
