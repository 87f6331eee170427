#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <utility>

#include "oracles.hpp"
#include "parcel/connector.hpp"
#include "parcel/grad.hpp"
#include "parcel/routing.hpp"

using namespace parcel;

namespace {

FeatureGrid random_grid(int h, int w, int c, Rng& rng) {
  FeatureGrid grid(h, w, c);
  for (double& v : grid.values) v = rng.next_normal();
  return grid;
}

Matrix layer_norm_reference(const LayerNorm& ln, const Matrix& x) {
  Matrix out(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    double mean = 0.0;
    for (int j = 0; j < x.cols; ++j) mean += x.at(i, j);
    mean /= x.cols;
    double var = 0.0;
    for (int j = 0; j < x.cols; ++j) var += (x.at(i, j) - mean) * (x.at(i, j) - mean);
    var /= x.cols;
    for (int j = 0; j < x.cols; ++j)
      out.at(i, j) = (x.at(i, j) - mean) / std::sqrt(var + ln.eps) * ln.gamma[j];
  }
  return out;
}

Matrix mlp_reference(const Mlp& mlp, const Matrix& x) {
  const int hidden = mlp.w1.cols;
  Matrix out(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    std::vector<double> h(hidden, 0.0);
    for (int j = 0; j < hidden; ++j) {
      double s = 0.0;
      for (int t = 0; t < x.cols; ++t) s += x.at(i, t) * mlp.w1.at(t, j);
      h[j] = s * 0.5 * (1.0 + std::erf(s * 0.7071067811865475));
    }
    for (int j = 0; j < x.cols; ++j) {
      double s = 0.0;
      for (int t = 0; t < hidden; ++t) s += h[t] * mlp.w2.at(t, j);
      out.at(i, j) = s;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("average pooling on documented cases") {
  FeatureGrid constant(6, 9, 2);
  for (double& v : constant.values) v = 3.25;
  const Matrix pooled = average_pool(constant, 3);
  CHECK(pooled.rows == 6);
  for (double v : pooled.data) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));

  FeatureGrid tiny(2, 2, 1);
  tiny.values = {1, 2, 3, 4};
  const Matrix one = average_pool(tiny, 2);
  CHECK(one.rows == 1);
  CHECK(one.cols == 1);
  CHECK(one.at(0, 0) == 2.5);
}

TEST_CASE("average pooling matches the window-mean oracle") {
  Rng rng(41);
  const FeatureGrid grid = random_grid(16, 16, 3, rng);
  const Matrix got = average_pool(grid, 4);
  CHECK(got.rows == 16);
  CHECK(max_abs_diff(got, oracles::pool_reference(grid, 4)) < 1e-12);
}

TEST_CASE("average pooling preserves the global channel mean") {
  Rng rng(42);
  const FeatureGrid grid = random_grid(8, 12, 4, rng);
  const Matrix pooled = average_pool(grid, 2);
  for (int c = 0; c < 4; ++c) {
    double grid_mean = 0.0;
    for (int h = 0; h < 8; ++h)
      for (int w = 0; w < 12; ++w) grid_mean += grid.at(h, w, c);
    grid_mean /= 8 * 12;
    double pooled_mean = 0.0;
    for (int i = 0; i < pooled.rows; ++i) pooled_mean += pooled.at(i, c);
    pooled_mean /= pooled.rows;
    CHECK(std::fabs(pooled_mean - grid_mean) / std::fabs(grid_mean) < 1e-9);
  }
}

TEST_CASE("average pooling rejects non-divisible kernels") {
  const FeatureGrid grid(6, 6, 1);
  CHECK_THROWS_AS(average_pool(grid, 4), std::invalid_argument);
  CHECK_THROWS_AS(average_pool(grid, 0), std::invalid_argument);
}

TEST_CASE("pool backward spreads gradient evenly") {
  Matrix d_pooled(4, 2);
  for (double& v : d_pooled.data) v = 1.0;
  const FeatureGrid d_grid = average_pool_backward(d_pooled, 4, 4, 2);
  for (double v : d_grid.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  // Agreement with finite differences through the forward pass.
  Rng rng(43);
  const FeatureGrid grid = random_grid(4, 4, 2, rng);
  const auto loss = [&](const Matrix& flat) {
    FeatureGrid g(4, 4, 2);
    g.values = flat.data;
    const Matrix pooled = average_pool(g, 2);
    double s = 0.0;
    for (double v : pooled.data) s += v;
    return s;
  };
  Matrix flat(1, static_cast<int>(grid.values.size()));
  flat.data = grid.values;
  const Matrix fd = finite_difference_gradient(loss, flat, 1e-5);
  for (double v : fd.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("nested truncation returns the stored prefix bit for bit") {
  Rng rng(44);
  const QueryBank bank = make_query_bank(192, 8, rng);
  const Matrix empty = nested_truncate(bank, 0);
  CHECK(empty.rows == 0);
  const Matrix small = nested_truncate(bank, 48);
  const Matrix full = nested_truncate(bank, 192);
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 8; ++j) CHECK(small.at(i, j) == full.at(i, j));
  CHECK_THROWS_AS(nested_truncate(bank, 193), std::out_of_range);
  CHECK_THROWS_AS(nested_truncate(bank, -1), std::out_of_range);
}

TEST_CASE("query banks are deterministic per seed") {
  Rng a(45), b(45), c(46);
  const QueryBank ba = make_query_bank(16, 4, a);
  const QueryBank bb = make_query_bank(16, 4, b);
  const QueryBank bc = make_query_bank(16, 4, c);
  CHECK(max_abs_diff(ba.embeddings, bb.embeddings) == 0.0);
  CHECK(max_abs_diff(ba.embeddings, bc.embeddings) > 0.0);
}

TEST_CASE("anchor-only budgets bypass attention entirely") {
  Rng rng(47);
  const ConnectorConfig cfg{8, 2, 16};
  const PcqrParams params = make_pcqr_params(cfg, 470);
  const QueryBank bank = make_query_bank(192, 8, rng);
  const FeatureGrid grid = random_grid(16, 16, 8, rng);

  for (const int b : {16, 64}) {
    const BudgetRoute route = route_budget(b, Regime::Default224);
    REQUIRE(route.queries == 0);
    const ConnectorOutput out = pcqr_forward(grid, route, bank, params);
    CHECK(out.assembled.rows == b);
    CHECK(max_abs_diff(out.assembled, out.pool_tokens) == 0.0);
    CHECK(max_abs_diff(out.assembled, average_pool(grid, route.kernel)) == 0.0);
    CHECK(out.explorer_tokens.rows == 0);
    CHECK(out.cross_weights.rows == 0);
  }
}

TEST_CASE("assembled output stacks pools then explorers with unit weight rows") {
  Rng rng(48);
  const ConnectorConfig cfg{8, 2, 16};
  const PcqrParams params = make_pcqr_params(cfg, 480);
  const QueryBank bank = make_query_bank(192, 8, rng);
  const FeatureGrid grid = random_grid(16, 16, 8, rng);

  const BudgetRoute route = route_budget(100, Regime::Default224);
  const ConnectorOutput out = pcqr_forward(grid, route, bank, params);
  CHECK(out.assembled.rows == 100);
  CHECK(out.pool_tokens.rows == 64);
  CHECK(out.explorer_tokens.rows == 36);
  CHECK(out.cross_weights.rows == 36);
  CHECK(out.cross_weights.cols == 256);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 8; ++j) CHECK(out.assembled.at(i, j) == out.pool_tokens.at(i, j));
  for (int i = 0; i < 36; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(out.assembled.at(64 + i, j) == out.explorer_tokens.at(i, j));
  for (int i = 0; i < out.cross_weights.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < out.cross_weights.cols; ++j) {
      CHECK(out.cross_weights.at(i, j) >= 0.0);
      s += out.cross_weights.at(i, j);
    }
    CHECK(std::fabs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("forward pass matches the composed straight-line oracle") {
  Rng rng(49);
  const ConnectorConfig cfg{8, 2, 16};
  const PcqrParams params = make_pcqr_params(cfg, 490);
  const QueryBank bank = make_query_bank(192, 8, rng);
  const FeatureGrid grid = random_grid(16, 16, 8, rng);
  const BudgetRoute route = route_budget(20, Regime::Default224);
  REQUIRE(route.anchors == 16);
  REQUIRE(route.queries == 4);

  const ConnectorOutput got = pcqr_forward(grid, route, bank, params);

  const Matrix pool = oracles::pool_reference(grid, route.kernel);
  const Matrix q_in = slice_rows(bank.embeddings, 0, route.queries);
  const Matrix joint = concat_rows(pool, q_in);
  const Matrix joint_normed = layer_norm_reference(params.self_block.norm, joint);
  const Matrix self_out = oracles::mha_reference(params.self_block.attn, joint_normed,
                                                 joint_normed);
  const Matrix joint_updated = add(joint, self_out);
  const Matrix pool_aware = slice_rows(joint_updated, route.anchors, route.budget);

  const Matrix cross_normed = layer_norm_reference(params.cross_block.norm, pool_aware);
  const Matrix cross_out =
      oracles::mha_reference(params.cross_block.attn, cross_normed, flatten_tokens(grid));
  const Matrix explored = add(pool_aware, cross_out);
  const Matrix q_se =
      add(explored, mlp_reference(params.mlp_block.mlp,
                                  layer_norm_reference(params.mlp_block.norm, explored)));
  const Matrix assembled = concat_rows(pool, q_se);

  CHECK(max_abs_diff(got.assembled, assembled) < 1e-9);
}

TEST_CASE("route and grid must agree") {
  Rng rng(50);
  const ConnectorConfig cfg{8, 2, 16};
  const PcqrParams params = make_pcqr_params(cfg, 500);
  const QueryBank bank = make_query_bank(192, 8, rng);
  const FeatureGrid small = random_grid(8, 8, 8, rng);
  const BudgetRoute route = route_budget(20, Regime::Default224);
  CHECK_THROWS_AS(pcqr_forward(small, route, bank, params), std::invalid_argument);

  const FeatureGrid wrong_width = random_grid(16, 16, 4, rng);
  CHECK_THROWS_AS(pcqr_forward(wrong_width, route, bank, params), std::invalid_argument);
}

TEST_CASE("documented prefix-consistency cases") {
  Rng rng(51);
  const ConnectorConfig cfg{4, 2, 8};
  const PcqrParams params = make_pcqr_params(cfg, 510);
  const FeatureGrid grid = random_grid(16, 16, 4, rng);
  const QueryBank bank = make_query_bank(192, 4, rng);
  CHECK(pcqr_prefix_consistency_check(grid, bank, params, 66, 70));
  CHECK_THROWS_AS(pcqr_prefix_consistency_check(grid, bank, params, 20, 100),
                  std::invalid_argument);

  const FeatureGrid high_grid = random_grid(32, 32, 4, rng);
  const QueryBank high_bank = make_query_bank(768, 4, rng);
  CHECK(pcqr_prefix_consistency_check(high_grid, high_bank, params, 258, 266));
  CHECK_THROWS_AS(pcqr_prefix_consistency_check(grid, bank, params, 70, 66),
                  std::invalid_argument);
}

TEST_CASE("queries see permuted grid tokens identically") {
  Rng rng(52);
  const ConnectorConfig cfg{8, 2, 16};
  const PcqrParams params = make_pcqr_params(cfg, 520);
  const QueryBank bank = make_query_bank(192, 8, rng);
  const FeatureGrid grid = random_grid(16, 16, 8, rng);
  const BudgetRoute route = route_budget(24, Regime::Default224);
  REQUIRE(route.kernel == 4);

  // Swap token positions inside pooling windows, channels moving together:
  // window means survive, so the pools stay put while the cross-attention
  // key/value rows reorder.
  FeatureGrid permuted = grid;
  Rng perm_rng(53);
  for (int bi = 0; bi < 4; ++bi) {
    for (int bj = 0; bj < 4; ++bj) {
      for (int n = 15; n > 0; --n) {
        const int m = static_cast<int>(perm_rng.next_below(n + 1));
        const int h1 = bi * 4 + n / 4, w1 = bj * 4 + n % 4;
        const int h2 = bi * 4 + m / 4, w2 = bj * 4 + m % 4;
        for (int c = 0; c < 8; ++c)
          std::swap(permuted.at(h1, w1, c), permuted.at(h2, w2, c));
      }
    }
  }

  const ConnectorOutput base = pcqr_forward(grid, route, bank, params);
  const ConnectorOutput shuffled = pcqr_forward(permuted, route, bank, params);
  CHECK(max_abs_diff(base.pool_tokens, shuffled.pool_tokens) < 1e-9);
  CHECK(max_abs_diff(base.explorer_tokens, shuffled.explorer_tokens) < 1e-9);
}

TEST_CASE("bank gradient matches finite differences on a desk-scale route") {
  Rng rng(54);
  const ConnectorConfig cfg{8, 2, 16};
  const PcqrParams params = make_pcqr_params(cfg, 540);
  const FeatureGrid grid = random_grid(2, 2, 8, rng);
  const QueryBank bank = make_query_bank(8, 8, rng);
  BudgetRoute route;
  route.kernel = 2;
  route.anchors = 1;
  route.queries = 5;
  route.budget = 6;

  PcqrCache cache;
  const ConnectorOutput out = pcqr_forward(grid, route, bank, params, &cache);
  Matrix ones(out.assembled.rows, out.assembled.cols);
  for (double& v : ones.data) v = 1.0;
  const Matrix grad_rows = pcqr_backward_bank(params, cache, ones);
  Matrix analytic(bank.capacity, 8);
  for (int i = 0; i < grad_rows.rows; ++i)
    for (int j = 0; j < 8; ++j) analytic.at(i, j) = grad_rows.at(i, j);

  const auto loss = [&](const Matrix& embeddings) {
    QueryBank probe = bank;
    probe.embeddings = embeddings;
    const ConnectorOutput o = pcqr_forward(grid, route, probe, params);
    double s = 0.0;
    for (double v : o.assembled.data) s += v;
    return s;
  };
  const Matrix fd = finite_difference_gradient(loss, bank.embeddings, 1e-4);
  CHECK(relative_error(analytic, fd) < 1e-4);
}

TEST_CASE("unused bank rows receive zero gradient") {
  Rng rng(55);
  const ConnectorConfig cfg{4, 2, 8};
  const PcqrParams params = make_pcqr_params(cfg, 550);
  const FeatureGrid grid = random_grid(2, 2, 4, rng);
  const QueryBank bank = make_query_bank(8, 4, rng);
  BudgetRoute route;
  route.kernel = 2;
  route.anchors = 1;
  route.queries = 3;
  route.budget = 4;

  PcqrCache cache;
  const ConnectorOutput out = pcqr_forward(grid, route, bank, params, &cache);
  Matrix ones(out.assembled.rows, out.assembled.cols);
  for (double& v : ones.data) v = 1.0;
  const Matrix grad_rows = pcqr_backward_bank(params, cache, ones);
  CHECK(grad_rows.rows == 3);

  const auto loss = [&](const Matrix& embeddings) {
    QueryBank probe = bank;
    probe.embeddings = embeddings;
    const ConnectorOutput o = pcqr_forward(grid, route, probe, params);
    double s = 0.0;
    for (double v : o.assembled.data) s += v;
    return s;
  };
  const Matrix fd = finite_difference_gradient(loss, bank.embeddings, 1e-4);
  for (int i = 3; i < 8; ++i)
    for (int j = 0; j < 4; ++j) CHECK(fd.at(i, j) == 0.0);
}
