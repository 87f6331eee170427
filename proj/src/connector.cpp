#include "parcel/connector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace parcel {

int default_bank_capacity(Regime regime) {
  // Largest N_q the routing can produce: max budget minus the top anchor size.
  return regime == Regime::Default224 ? 192 : 768;
}

int default_bank_capacity_mqt(Regime regime) {
  return regime == Regime::Default224 ? 256 : 1024;
}

QueryBank make_query_bank(int capacity, int width, Rng& rng) {
  if (capacity < 0 || width <= 0) {
    throw std::invalid_argument("make_query_bank: bad capacity/width");
  }
  QueryBank bank;
  bank.capacity = capacity;
  bank.embeddings = Matrix(capacity, width);
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  for (double& v : bank.embeddings.data) v = rng.uniform(-bound, bound);
  return bank;
}

PcqrParams make_pcqr_params(const ConnectorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  PcqrParams p;
  p.self_block.norm = make_layer_norm(cfg.width);
  p.self_block.attn = make_attention_params(cfg.width, cfg.heads, rng);
  p.cross_block.norm = make_layer_norm(cfg.width);
  p.cross_block.attn = make_attention_params(cfg.width, cfg.heads, rng);
  p.mlp_block.norm = make_layer_norm(cfg.width);
  p.mlp_block.mlp = make_mlp(cfg.width, cfg.mlp_hidden, rng);
  return p;
}

Matrix average_pool(const FeatureGrid& grid, int kernel) {
  validate_grid(grid);
  if (kernel < 1 || grid.height % kernel != 0 || grid.width % kernel != 0) {
    throw std::invalid_argument("average_pool: grid " + std::to_string(grid.height) + "x" +
                                std::to_string(grid.width) + " not divisible by kernel " +
                                std::to_string(kernel));
  }
  const int ph = grid.height / kernel;
  const int pw = grid.width / kernel;
  const double inv_window = 1.0 / (kernel * kernel);
  Matrix out(ph * pw, grid.channels);
  for (int i = 0; i < ph; ++i) {
    for (int j = 0; j < pw; ++j) {
      double* row = &out.data[static_cast<std::size_t>(i * pw + j) * grid.channels];
      for (int dh = 0; dh < kernel; ++dh) {
        for (int dw = 0; dw < kernel; ++dw) {
          for (int c = 0; c < grid.channels; ++c) {
            row[c] += grid.at(i * kernel + dh, j * kernel + dw, c);
          }
        }
      }
      for (int c = 0; c < grid.channels; ++c) row[c] *= inv_window;
    }
  }
  return out;
}

FeatureGrid average_pool_backward(const Matrix& d_pooled, int height, int width, int kernel) {
  if (kernel < 1 || height % kernel != 0 || width % kernel != 0) {
    throw std::invalid_argument("average_pool_backward: bad kernel");
  }
  const int ph = height / kernel;
  const int pw = width / kernel;
  if (d_pooled.rows != ph * pw) {
    throw std::invalid_argument("average_pool_backward: row count mismatch");
  }
  FeatureGrid d_grid(height, width, d_pooled.cols);
  const double inv_window = 1.0 / (kernel * kernel);
  for (int i = 0; i < ph; ++i)
    for (int j = 0; j < pw; ++j)
      for (int dh = 0; dh < kernel; ++dh)
        for (int dw = 0; dw < kernel; ++dw)
          for (int c = 0; c < d_pooled.cols; ++c)
            d_grid.at(i * kernel + dh, j * kernel + dw, c) =
                d_pooled.at(i * pw + j, c) * inv_window;
  return d_grid;
}

Matrix nested_truncate(const QueryBank& bank, int n) {
  if (n < 0 || n > bank.capacity) {
    throw std::out_of_range("nested_truncate: n " + std::to_string(n) +
                            " outside [0, " + std::to_string(bank.capacity) + "]");
  }
  return slice_rows(bank.embeddings, 0, n);
}

static void check_route_grid(const FeatureGrid& grid, const BudgetRoute& route) {
  const int source = grid.height * grid.width;
  if (route.kernel * route.kernel * route.anchors != source ||
      grid.height % route.kernel != 0 || grid.width % route.kernel != 0) {
    throw std::invalid_argument(
        "route/grid mismatch: k^2*N_p = " +
        std::to_string(route.kernel * route.kernel * route.anchors) +
        " but grid has " + std::to_string(source) + " tokens");
  }
}

ConnectorOutput pcqr_forward(const FeatureGrid& grid, const BudgetRoute& route,
                             const QueryBank& bank, const PcqrParams& params,
                             PcqrCache* cache) {
  validate_grid(grid);
  check_route_grid(grid, route);
  if (grid.channels != params.self_block.attn.width) {
    throw std::invalid_argument("pcqr_forward: grid channels " +
                                std::to_string(grid.channels) + " != connector width " +
                                std::to_string(params.self_block.attn.width));
  }
  if (route.anchors + route.queries != route.budget || route.queries < 0) {
    throw std::invalid_argument("pcqr_forward: inconsistent route");
  }

  ConnectorOutput out;
  out.pool_tokens = average_pool(grid, route.kernel);

  if (route.queries == 0) {
    // Anchor-only budget: no attention executes.
    out.explorer_tokens = Matrix(0, grid.channels);
    out.cross_weights = Matrix(0, grid.token_count());
    out.assembled = out.pool_tokens;
    return out;
  }

  const Matrix q_in = nested_truncate(bank, route.queries);
  const Matrix grid_tokens = flatten_tokens(grid);

  PcqrCache local;
  PcqrCache& c = cache != nullptr ? *cache : local;
  c.anchors = route.anchors;
  c.queries = route.queries;
  c.grid_tokens = grid_tokens;

  // Query <-> Pool self-attention: the joint [P; Q_IN] sequence attends to
  // itself; only the updated query rows are kept.
  const Matrix joint = concat_rows(out.pool_tokens, q_in);
  const Matrix joint_normed = layer_norm_forward(params.self_block.norm, joint, &c.self_norm);
  const AttentionOutput self_out =
      multi_head_attention(params.self_block.attn, joint_normed, joint_normed, &c.self_attn);
  const Matrix joint_updated = add(joint, self_out.output);
  const Matrix pool_aware = slice_rows(joint_updated, route.anchors, route.budget);

  // Query -> ViT cross-attention over the raw flattened grid.
  const Matrix cross_normed =
      layer_norm_forward(params.cross_block.norm, pool_aware, &c.cross_norm);
  const AttentionOutput cross_out =
      multi_head_attention(params.cross_block.attn, cross_normed, grid_tokens, &c.cross_attn);
  const Matrix explored = add(pool_aware, cross_out.output);

  // Query-token MLP.
  const Matrix mlp_normed = layer_norm_forward(params.mlp_block.norm, explored, &c.mlp_norm);
  const Matrix mlp_out = mlp_forward(params.mlp_block.mlp, mlp_normed, &c.mlp);
  out.explorer_tokens = add(explored, mlp_out);

  out.cross_weights = cross_out.weights;
  out.assembled = concat_rows(out.pool_tokens, out.explorer_tokens);
  return out;
}

Matrix pcqr_backward_bank(const PcqrParams& params, const PcqrCache& cache,
                          const Matrix& d_assembled) {
  const int n_p = cache.anchors;
  const int n_q = cache.queries;
  if (n_q == 0) return Matrix(0, d_assembled.cols);
  if (d_assembled.rows != n_p + n_q) {
    throw std::invalid_argument("pcqr_backward_bank: d_assembled rows != B");
  }

  // Pool rows of the output do not depend on the bank.
  const Matrix d_explorer = slice_rows(d_assembled, n_p, n_p + n_q);

  // MLP block: q_se = explored + mlp(norm(explored)).
  Matrix d_explored =
      add(d_explorer, layer_norm_backward(params.mlp_block.norm, cache.mlp_norm,
                                          mlp_backward(params.mlp_block.mlp, cache.mlp,
                                                       d_explorer)));

  // Cross block: explored = pool_aware + attn(norm(pool_aware), grid).
  const AttentionGrads cross_grads =
      multi_head_attention_backward(params.cross_block.attn, cache.cross_attn, d_explored);
  Matrix d_pool_aware =
      add(d_explored,
          layer_norm_backward(params.cross_block.norm, cache.cross_norm, cross_grads.d_queries));

  // Self block: joint_updated = joint + attn(norm(joint), norm(joint));
  // only the query rows of joint_updated carry gradient.
  Matrix d_joint_updated(n_p + n_q, d_assembled.cols);
  for (int i = 0; i < n_q; ++i)
    for (int j = 0; j < d_assembled.cols; ++j)
      d_joint_updated.at(n_p + i, j) = d_pool_aware.at(i, j);

  const AttentionGrads self_grads =
      multi_head_attention_backward(params.self_block.attn, cache.self_attn, d_joint_updated);
  const Matrix d_joint_normed = add(self_grads.d_queries, self_grads.d_keys_values);
  const Matrix d_joint =
      add(d_joint_updated,
          layer_norm_backward(params.self_block.norm, cache.self_norm, d_joint_normed));

  return slice_rows(d_joint, n_p, n_p + n_q);
}

bool pcqr_prefix_consistency_check(const FeatureGrid& grid, const QueryBank& bank,
                                   const PcqrParams& params, int b1, int b2) {
  if (b1 >= b2) throw std::invalid_argument("pcqr_prefix_consistency_check: need b1 < b2");
  const int source = grid.height * grid.width;
  Regime regime;
  if (source == source_token_count(Regime::Default224)) {
    regime = Regime::Default224;
  } else if (source == source_token_count(Regime::High448)) {
    regime = Regime::High448;
  } else {
    throw std::invalid_argument("pcqr_prefix_consistency_check: grid with " +
                                std::to_string(source) + " tokens matches no routing regime");
  }
  const BudgetRoute r1 = route_budget(b1, regime);
  const BudgetRoute r2 = route_budget(b2, regime);
  if (r1.anchors != r2.anchors) {
    throw std::invalid_argument("pcqr_prefix_consistency_check: anchor counts differ (" +
                                std::to_string(r1.anchors) + " vs " +
                                std::to_string(r2.anchors) + "); budgets are incomparable");
  }
  check_route_grid(grid, r1);
  if (grid.channels != params.self_block.attn.width) {
    throw std::invalid_argument("pcqr_prefix_consistency_check: width mismatch");
  }
  const Matrix q1 = nested_truncate(bank, r1.queries);
  const Matrix q2 = nested_truncate(bank, r2.queries);
  for (int i = 0; i < q1.rows; ++i)
    for (int j = 0; j < q1.cols; ++j)
      if (q1.at(i, j) != q2.at(i, j)) return false;
  return true;
}

}  // namespace parcel
