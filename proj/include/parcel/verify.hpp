#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace parcel {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

bool all_pass(const std::vector<CheckResult>& results);

// Parseval identity on seeded random grids (default 50), plus the
// documented inscribed-Nyquist values r_max(16,16)=8, r_max(8,8)=4.
std::vector<CheckResult> verify_parseval(int grids = 50, std::uint64_t seed = 2024);

// Analytic vs central finite-difference gradients for the attention
// primitive and pcqr_forward w.r.t. query embeddings (<=8-token instances).
std::vector<CheckResult> verify_gradcheck(int seeds = 20, std::uint64_t seed = 7);

// Nested-prefix consistency across all budget pairs sharing an anchor
// count, both regimes, plus routing-table conformance sweeps.
std::vector<CheckResult> verify_prefix(std::uint64_t seed = 11);

// The Figure 1 efficiency table and the 106,496 bytes-per-token constant.
std::vector<CheckResult> verify_figure1();

// chi-square upper tail probability (survival function), used for the
// budget-menu uniformity check.
double chi_square_pvalue(double statistic, int dof);

// Budget-menu conformance: draws-per-method membership + uniformity.
std::vector<CheckResult> verify_menus(int draws = 100000, std::uint64_t seed = 5,
                                      double min_p = 0.01);

std::vector<CheckResult> verify_all();

}  // namespace parcel
