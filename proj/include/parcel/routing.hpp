#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parcel/rng.hpp"

namespace parcel {

// Source resolution regime. default-224 has a 16x16 source grid
// (256 tokens); high-448 has 32x32 (1024 tokens).
enum class Regime { Default224, High448 };

int source_side(Regime regime);          // 16 or 32
int source_token_count(Regime regime);   // 256 or 1024
int max_budget(Regime regime);           // 256 or 1024
constexpr int kMinBudget = 16;

std::string regime_name(Regime regime);
Regime parse_regime(const std::string& name);  // "default-224" / "high-448"

// Decomposition of a token budget into spatial anchors and queries.
struct BudgetRoute {
  int budget = 0;    // B
  int anchors = 0;   // N_p
  int queries = 0;   // N_q
  int kernel = 0;    // pooling window side k; k^2 * N_p = source tokens
  Regime regime = Regime::Default224;
};

// Piecewise routing:
//   default-224:  B < 64  -> (16, B-16, k=4);  B >= 64 -> (64, B-64, k=2)
//   high-448:     B < 64  -> (16, B-16, k=8);  B < 256 -> (64, B-64, k=4);
//                 B >= 256 -> (256, B-256, k=2)
// Throws std::out_of_range (message includes the valid range) when B is
// outside [16, regime max].
BudgetRoute route_budget(int budget, Regime regime);

enum class SamplingMethod { Parcel, Mqt, M3 };

std::string method_name(SamplingMethod method);
SamplingMethod parse_method(const std::string& name);

// Training-time budget menus:
//   parcel: even {16..256}  (even {16..1024} at high-448)
//   mqt:    even {2..256}   (even {2..1024} at high-448)
//   m3:     {4,16,64,256}   (+1024 at high-448)
std::vector<int> budget_menu(SamplingMethod method, Regime regime);

// Uniform draw from the method's menu.
int sample_budget(Rng& rng, SamplingMethod method, Regime regime);
int sample_budget(std::uint64_t seed, SamplingMethod method, Regime regime);

}  // namespace parcel
