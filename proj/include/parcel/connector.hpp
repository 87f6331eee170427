#pragma once

#include <cstdint>

#include "parcel/attention.hpp"
#include "parcel/feature_grid.hpp"
#include "parcel/matrix.hpp"
#include "parcel/routing.hpp"

namespace parcel {

// Connector hyperparameters. Full-scale defaults; desk-scale tests pass
// small widths.
struct ConnectorConfig {
  int width = 1152;      // D_v
  int heads = 12;
  int mlp_hidden = 4304; // M_v
};

// Ordered bank of learned query embeddings. Truncation always returns the
// leading rows, bit-identical across calls; that prefix structure is what
// makes budget truncation work.
struct QueryBank {
  int capacity = 0;
  Matrix embeddings;  // capacity x width
};

// Default bank ceiling per regime: the largest N_q the routing can ask for.
int default_bank_capacity(Regime regime);                 // 192 / 768
int default_bank_capacity_mqt(Regime regime);             // 256 / 1024

QueryBank make_query_bank(int capacity, int width, Rng& rng);

// One attention block: pre-norm on the query path, then attention, then a
// residual connection. Keys and values enter raw, without a norm.
struct AttentionBlock {
  LayerNorm norm;
  AttentionParams attn;
};

// Pre-norm MLP with residual, applied to query tokens only.
struct MlpBlock {
  LayerNorm norm;
  Mlp mlp;
};

struct PcqrParams {
  AttentionBlock self_block;   // Query <-> Pool self-attention
  AttentionBlock cross_block;  // Query -> ViT cross-attention
  MlpBlock mlp_block;
};

PcqrParams make_pcqr_params(const ConnectorConfig& cfg, std::uint64_t seed);

// Spatial k x k average pooling; output tokens row-major over the pooled
// grid, one row per token, C columns. H and W must divide by k.
Matrix average_pool(const FeatureGrid& grid, int kernel);

// Distributes d(pooled) evenly over each pooling window.
FeatureGrid average_pool_backward(const Matrix& d_pooled, int height, int width, int kernel);

// First n rows of the bank. Throws if n is out of [0, capacity].
Matrix nested_truncate(const QueryBank& bank, int n);

struct ConnectorOutput {
  Matrix pool_tokens;    // N_p x D
  Matrix explorer_tokens;  // N_q x D (Q_SE)
  Matrix assembled;      // B x D: pool rows then explorer rows
  Matrix cross_weights;  // N_q x N_v, head-averaged; empty when N_q = 0
};

// Intermediates for the analytic backward w.r.t. the query bank.
struct PcqrCache {
  Matrix grid_tokens;  // N_v x D
  LayerNormCache self_norm;
  AttentionCache self_attn;
  LayerNormCache cross_norm;
  AttentionCache cross_attn;
  LayerNormCache mlp_norm;
  MlpCache mlp;
  int anchors = 0;
  int queries = 0;
};

// The PCQR pipeline:
//   P  = average_pool(grid, k)
//   Q0 = nested_truncate(bank, N_q)
//   [P;Q0] -> pre-norm self-attention + residual; keep the query rows (Q_PA)
//   Q_PA -> pre-norm cross-attention over the flattened grid + residual
//        -> pre-norm query MLP + residual  (Q_SE)
//   assembled = [P; Q_SE]
// When N_q = 0 no attention runs and assembled = P.
ConnectorOutput pcqr_forward(const FeatureGrid& grid, const BudgetRoute& route,
                             const QueryBank& bank, const PcqrParams& params,
                             PcqrCache* cache = nullptr);

// Gradient of sum(d_assembled .* assembled) w.r.t. the bank rows consumed
// by the forward pass. Returns an N_q x D matrix.
Matrix pcqr_backward_bank(const PcqrParams& params, const PcqrCache& cache,
                          const Matrix& d_assembled);

// True iff the query embeddings consumed at budget b1 are the leading rows
// of those consumed at b2. The regime is deduced from the grid's token
// count (256 -> default-224, 1024 -> high-448). Throws when the two budgets
// route to different anchor counts.
bool pcqr_prefix_consistency_check(const FeatureGrid& grid, const QueryBank& bank,
                                   const PcqrParams& params, int b1, int b2);

}  // namespace parcel
