#pragma once

#include "parcel/connector.hpp"
#include "parcel/feature_grid.hpp"
#include "parcel/matrix.hpp"
#include "parcel/routing.hpp"

namespace parcel {

// Square spatial average pooling (M3-style). B must be in the m3 menu and
// the grid square with side divisible by sqrt(B). Output: B x C.
Matrix m3_forward(const FeatureGrid& grid, int budget, Regime regime);

struct MqtOutput {
  Matrix tokens;   // B x D
  Matrix weights;  // B x N_v, head-averaged
};

// Query-only resampling (MQT-style): the truncated bank cross-attends once
// to the flattened grid, with the same pre-norm/residual/MLP convention as
// the PARCEL connector. Queries never attend to each other, so truncation
// commutes with the forward pass.
struct MqtParams {
  AttentionBlock cross_block;
  MlpBlock mlp_block;
};

MqtParams make_mqt_params(const ConnectorConfig& cfg, std::uint64_t seed);

MqtOutput mqt_forward(const FeatureGrid& grid, int budget, const QueryBank& bank,
                      const MqtParams& params, Regime regime);

}  // namespace parcel
