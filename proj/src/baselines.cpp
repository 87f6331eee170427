#include "parcel/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace parcel {

Matrix m3_forward(const FeatureGrid& grid, int budget, Regime regime) {
  validate_grid(grid);
  const std::vector<int> menu = budget_menu(SamplingMethod::M3, regime);
  if (std::find(menu.begin(), menu.end(), budget) == menu.end()) {
    throw std::invalid_argument("m3_forward: budget " + std::to_string(budget) +
                                " not in the m3 menu for " + regime_name(regime));
  }
  if (grid.height != grid.width) {
    throw std::invalid_argument("m3_forward: grid must be square");
  }
  const int out_side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(budget))));
  if (out_side * out_side != budget || grid.height % out_side != 0) {
    throw std::invalid_argument("m3_forward: side " + std::to_string(grid.height) +
                                " not divisible by sqrt(budget)");
  }
  return average_pool(grid, grid.height / out_side);
}

MqtParams make_mqt_params(const ConnectorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  MqtParams p;
  p.cross_block.norm = make_layer_norm(cfg.width);
  p.cross_block.attn = make_attention_params(cfg.width, cfg.heads, rng);
  p.mlp_block.norm = make_layer_norm(cfg.width);
  p.mlp_block.mlp = make_mlp(cfg.width, cfg.mlp_hidden, rng);
  return p;
}

MqtOutput mqt_forward(const FeatureGrid& grid, int budget, const QueryBank& bank,
                      const MqtParams& params, Regime regime) {
  validate_grid(grid);
  const std::vector<int> menu = budget_menu(SamplingMethod::Mqt, regime);
  if (std::find(menu.begin(), menu.end(), budget) == menu.end()) {
    throw std::invalid_argument("mqt_forward: budget " + std::to_string(budget) +
                                " not in the mqt menu for " + regime_name(regime));
  }
  if (grid.channels != params.cross_block.attn.width) {
    throw std::invalid_argument("mqt_forward: grid channels != connector width");
  }

  const Matrix queries = nested_truncate(bank, budget);
  const Matrix grid_tokens = flatten_tokens(grid);

  const Matrix normed = layer_norm_forward(params.cross_block.norm, queries);
  const AttentionOutput cross =
      multi_head_attention(params.cross_block.attn, normed, grid_tokens);
  const Matrix attended = add(queries, cross.output);

  const Matrix mlp_normed = layer_norm_forward(params.mlp_block.norm, attended);
  const Matrix tokens = add(attended, mlp_forward(params.mlp_block.mlp, mlp_normed));

  MqtOutput out;
  out.tokens = tokens;
  out.weights = cross.weights;
  return out;
}

}  // namespace parcel
