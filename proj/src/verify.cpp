#include "parcel/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "parcel/connector.hpp"
#include "parcel/costmodel.hpp"
#include "parcel/grad.hpp"
#include "parcel/matrix.hpp"
#include "parcel/routing.hpp"
#include "parcel/spectral.hpp"
#include "parcel/synth.hpp"

namespace parcel {

bool all_pass(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results)
    if (!r.pass) return false;
  return true;
}

namespace {

FeatureGrid random_grid(int h, int w, int c, Rng& rng) {
  FeatureGrid grid(h, w, c);
  for (double& v : grid.values) v = rng.next_normal();
  return grid;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace

std::vector<CheckResult> verify_parseval(int grids, std::uint64_t seed) {
  std::vector<CheckResult> results;
  Rng rng(seed);
  const int shapes[][3] = {{16, 16, 4}, {32, 32, 8}, {8, 8, 2}, {12, 20, 3}, {20, 12, 5}};
  double worst = 0.0;
  bool pass = true;
  for (int i = 0; i < grids; ++i) {
    const auto& s = shapes[i % 5];
    const FeatureGrid grid = random_grid(s[0], s[1], s[2], rng);
    const double err = parseval_relative_error(grid, dft2_normalized(grid));
    worst = std::max(worst, err);
    if (err > 1e-6) pass = false;
  }
  results.push_back({"parseval_identity", pass,
                     std::to_string(grids) + " grids, worst relative error " +
                         format_double(worst)});
  results.push_back({"nyquist_radius_16x16", inscribed_nyquist_radius(16, 16) == 8,
                     "r_max(16,16) = " + std::to_string(inscribed_nyquist_radius(16, 16))});
  results.push_back({"nyquist_radius_8x8", inscribed_nyquist_radius(8, 8) == 4,
                     "r_max(8,8) = " + std::to_string(inscribed_nyquist_radius(8, 8))});
  return results;
}

std::vector<CheckResult> verify_gradcheck(int seeds, std::uint64_t seed) {
  std::vector<CheckResult> results;
  const double step = 1e-4;
  const double tolerance = 1e-4;

  double worst_attention = 0.0;
  bool attention_pass = true;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(seed + s);
    const int width = 8, heads = 2, n_q = 3, n_kv = 5;
    const AttentionParams params = make_attention_params(width, heads, rng);
    Matrix queries(n_q, width), keys_values(n_kv, width);
    for (double& v : queries.data) v = rng.next_normal();
    for (double& v : keys_values.data) v = rng.next_normal();

    AttentionCache cache;
    const AttentionOutput out = multi_head_attention(params, queries, keys_values, &cache);
    Matrix ones(out.output.rows, out.output.cols);
    for (double& v : ones.data) v = 1.0;
    const AttentionGrads grads = multi_head_attention_backward(params, cache, ones);

    const auto loss_q = [&](const Matrix& q) {
      const Matrix o = multi_head_attention(params, q, keys_values).output;
      long double sum = 0.0L;
      for (double v : o.data) sum += v;
      return static_cast<double>(sum);
    };
    const auto loss_kv = [&](const Matrix& kv) {
      const Matrix o = multi_head_attention(params, queries, kv).output;
      long double sum = 0.0L;
      for (double v : o.data) sum += v;
      return static_cast<double>(sum);
    };
    const double err_q =
        relative_error(grads.d_queries, finite_difference_gradient(loss_q, queries, step));
    const double err_kv = relative_error(
        grads.d_keys_values, finite_difference_gradient(loss_kv, keys_values, step));
    worst_attention = std::max({worst_attention, err_q, err_kv});
    if (err_q > tolerance || err_kv > tolerance) attention_pass = false;
  }
  results.push_back({"attention_gradient", attention_pass,
                     std::to_string(seeds) + " seeds, worst relative error " +
                         format_double(worst_attention)});

  double worst_pcqr = 0.0;
  bool pcqr_pass = true;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(seed + 1000 + s);
    const ConnectorConfig cfg{8, 2, 16};
    const PcqrParams params = make_pcqr_params(cfg, seed + 2000 + s);
    // 2x2 source grid, 1 anchor, up to 7 queries: at most 8 tokens total.
    const FeatureGrid grid = random_grid(2, 2, cfg.width, rng);
    BudgetRoute route;
    route.kernel = 2;
    route.anchors = 1;
    route.queries = 3 + s % 5;
    route.budget = route.anchors + route.queries;
    const QueryBank bank = make_query_bank(8, cfg.width, rng);

    PcqrCache cache;
    const ConnectorOutput out = pcqr_forward(grid, route, bank, params, &cache);
    Matrix ones(out.assembled.rows, out.assembled.cols);
    for (double& v : ones.data) v = 1.0;
    const Matrix analytic_rows = pcqr_backward_bank(params, cache, ones);
    Matrix analytic(bank.capacity, cfg.width);
    for (int i = 0; i < analytic_rows.rows; ++i)
      for (int j = 0; j < analytic_rows.cols; ++j) analytic.at(i, j) = analytic_rows.at(i, j);

    const auto loss = [&](const Matrix& embeddings) {
      QueryBank probe = bank;
      probe.embeddings = embeddings;
      const ConnectorOutput o = pcqr_forward(grid, route, probe, params);
      long double sum = 0.0L;
      for (double v : o.assembled.data) sum += v;
      return static_cast<double>(sum);
    };
    const double err = relative_error(
        analytic, finite_difference_gradient(loss, bank.embeddings, step));
    worst_pcqr = std::max(worst_pcqr, err);
    if (err > tolerance) pcqr_pass = false;
  }
  results.push_back({"pcqr_query_gradient", pcqr_pass,
                     std::to_string(seeds) + " seeds, worst relative error " +
                         format_double(worst_pcqr)});
  return results;
}

namespace {

bool routing_sweep(Regime regime, std::string& detail) {
  const int hi = max_budget(regime);
  const int source = source_token_count(regime);
  for (int b = kMinBudget; b <= hi; ++b) {
    const BudgetRoute r = route_budget(b, regime);
    int expect_np = 0, expect_k = 0;
    if (regime == Regime::Default224) {
      expect_np = b < 64 ? 16 : 64;
      expect_k = b < 64 ? 4 : 2;
    } else {
      expect_np = b < 64 ? 16 : (b < 256 ? 64 : 256);
      expect_k = b < 64 ? 8 : (b < 256 ? 4 : 2);
    }
    if (r.anchors != expect_np || r.kernel != expect_k || r.anchors + r.queries != b ||
        r.kernel * r.kernel * r.anchors != source) {
      detail = "budget " + std::to_string(b) + " routed to (" + std::to_string(r.anchors) +
               ", " + std::to_string(r.queries) + ", k=" + std::to_string(r.kernel) + ")";
      return false;
    }
  }
  for (const int bad : {kMinBudget - 1, hi + 1, 0, -4}) {
    try {
      route_budget(bad, regime);
      detail = "budget " + std::to_string(bad) + " should have been rejected";
      return false;
    } catch (const std::out_of_range&) {
    }
  }
  detail = "budgets " + std::to_string(kMinBudget) + ".." + std::to_string(hi) + " conform";
  return true;
}

}  // namespace

std::vector<CheckResult> verify_prefix(std::uint64_t seed) {
  std::vector<CheckResult> results;

  std::string detail;
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = routing_sweep(Regime::Default224, detail);
  results.push_back({"routing_sweep_default", pass, detail});
  pass = routing_sweep(Regime::High448, detail);
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  results.push_back({"routing_sweep_high", pass, detail + " (" + format_double(ms) + " ms)"});

  for (const Regime regime : {Regime::Default224, Regime::High448}) {
    Rng rng(seed);
    const int width = 4;
    const ConnectorConfig cfg{width, 2, 8};
    const PcqrParams params = make_pcqr_params(cfg, seed);
    const int side = source_side(regime);
    const FeatureGrid grid = random_grid(side, side, width, rng);
    const QueryBank bank = make_query_bank(default_bank_capacity(regime), width, rng);

    long long pairs = 0;
    bool prefix_pass = true;
    std::string prefix_detail;
    const int hi = max_budget(regime);
    for (int b1 = kMinBudget; b1 <= hi && prefix_pass; ++b1) {
      const BudgetRoute r1 = route_budget(b1, regime);
      for (int b2 = b1 + 1; b2 <= hi; ++b2) {
        if (route_budget(b2, regime).anchors != r1.anchors) continue;
        ++pairs;
        if (!pcqr_prefix_consistency_check(grid, bank, params, b1, b2)) {
          prefix_pass = false;
          prefix_detail = "pair (" + std::to_string(b1) + ", " + std::to_string(b2) + ") failed";
          break;
        }
      }
    }
    if (prefix_pass) prefix_detail = std::to_string(pairs) + " budget pairs share their prefix";
    results.push_back({"nested_prefix_" + regime_name(regime), prefix_pass, prefix_detail});
  }
  return results;
}

std::vector<CheckResult> verify_figure1() {
  std::vector<CheckResult> results;
  const ModelConfig cfg;

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Figure1Row> table = figure1_table(cfg);
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  struct Expected {
    std::int64_t budget;
    const char* image_tflops;
    const char* video_tflops;
    std::int64_t image_kv;
    std::int64_t video_kv;
  };
  const Expected expected[] = {
      {16, "1.0", "4.9", 15, 33},
      {64, "1.2", "8.2", 20, 111},
      {256, "2.0", "24.3", 39, 423},
  };
  bool pass = table.size() == 3;
  std::string detail;
  for (int i = 0; i < 3 && pass; ++i) {
    const Figure1Row& row = table[i];
    const Expected& e = expected[i];
    if (row.budget != e.budget || row.image_tflops != e.image_tflops ||
        row.video_tflops != e.video_tflops || row.image_kv_mb != e.image_kv ||
        row.video_kv_mb != e.video_kv) {
      pass = false;
      detail = "budget " + std::to_string(e.budget) + ": got " + row.image_tflops + "/" +
               row.video_tflops + " TFLOPs, " + std::to_string(row.image_kv_mb) + "/" +
               std::to_string(row.video_kv_mb) + " MB";
    }
  }
  if (pass) detail = "all 12 cells match (" + format_double(ms) + " ms)";
  results.push_back({"figure1_table", pass, detail});

  const std::int64_t bpt = kv_cache_mb(cfg, 1).bytes_per_token;
  results.push_back({"kv_bytes_per_token", bpt == 106496,
                     "bytes per cached token = " + std::to_string(bpt)});
  return results;
}

double chi_square_pvalue(double statistic, int dof) {
  // Upper regularized incomplete gamma Q(dof/2, stat/2), series + continued
  // fraction split at x = a + 1.
  const double a = 0.5 * dof;
  const double x = 0.5 * statistic;
  if (x < 0.0 || dof < 1) return 0.0;
  if (x == 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) by series, return 1 - P.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - lg);
    return 1.0 - p;
  }
  // Q(a,x) by Lentz continued fraction.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - lg) * h;
}

std::vector<CheckResult> verify_menus(int draws, std::uint64_t seed, double min_p) {
  std::vector<CheckResult> results;
  for (const SamplingMethod method :
       {SamplingMethod::Parcel, SamplingMethod::Mqt, SamplingMethod::M3}) {
    const std::vector<int> menu = budget_menu(method, Regime::Default224);
    std::vector<long long> counts(menu.size(), 0);
    Rng rng(seed);
    bool member_pass = true;
    for (int i = 0; i < draws; ++i) {
      const int b = sample_budget(rng, method, Regime::Default224);
      const auto it = std::lower_bound(menu.begin(), menu.end(), b);
      if (it == menu.end() || *it != b) {
        member_pass = false;
        break;
      }
      counts[static_cast<std::size_t>(it - menu.begin())] += 1;
    }
    double stat = 0.0;
    const double expected = static_cast<double>(draws) / menu.size();
    for (long long c : counts) {
      const double d = c - expected;
      stat += d * d / expected;
    }
    const double p = chi_square_pvalue(stat, static_cast<int>(menu.size()) - 1);
    const bool pass = member_pass && p > min_p;
    results.push_back({"menu_" + method_name(method), pass,
                       std::to_string(draws) + " draws in menu, chi-square p = " +
                           format_double(p)});
  }
  return results;
}

std::vector<CheckResult> verify_all() {
  std::vector<CheckResult> results;
  for (auto& chunk : {verify_parseval(), verify_gradcheck(), verify_prefix(),
                      verify_figure1(), verify_menus()}) {
    results.insert(results.end(), chunk.begin(), chunk.end());
  }
  return results;
}

}  // namespace parcel
