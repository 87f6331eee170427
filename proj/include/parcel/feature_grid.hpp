#pragma once

#include <cstddef>
#include <vector>

#include "parcel/matrix.hpp"

namespace parcel {

// H x W x C feature map, row-major with channels innermost
// (h outer, w middle, c inner). Surrogate for a ViT output grid.
struct FeatureGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;  // height * width * channels

  FeatureGrid() = default;
  FeatureGrid(int h, int w, int c)
      : height(h), width(w), channels(c),
        values(static_cast<std::size_t>(h) * w * c, 0.0) {}

  double& at(int h, int w, int c) {
    return values[(static_cast<std::size_t>(h) * width + w) * channels + c];
  }
  double at(int h, int w, int c) const {
    return values[(static_cast<std::size_t>(h) * width + w) * channels + c];
  }

  int token_count() const { return height * width; }
};

// Throws std::invalid_argument unless dims >= 1, the value count matches,
// and every value is finite.
void validate_grid(const FeatureGrid& grid);

// (H*W) x C matrix, tokens in spatial row-major order.
Matrix flatten_tokens(const FeatureGrid& grid);

FeatureGrid unflatten_tokens(const Matrix& tokens, int height, int width);

}  // namespace parcel
