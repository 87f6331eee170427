#include "parcel/routing.hpp"

#include <stdexcept>

namespace parcel {

int source_side(Regime regime) { return regime == Regime::Default224 ? 16 : 32; }

int source_token_count(Regime regime) {
  const int side = source_side(regime);
  return side * side;
}

int max_budget(Regime regime) { return regime == Regime::Default224 ? 256 : 1024; }

std::string regime_name(Regime regime) {
  return regime == Regime::Default224 ? "default-224" : "high-448";
}

Regime parse_regime(const std::string& name) {
  if (name == "default-224" || name == "default") return Regime::Default224;
  if (name == "high-448" || name == "high") return Regime::High448;
  throw std::invalid_argument("unknown regime '" + name + "' (default-224 | high-448)");
}

BudgetRoute route_budget(int budget, Regime regime) {
  const int hi = max_budget(regime);
  if (budget < kMinBudget || budget > hi) {
    throw std::out_of_range("budget " + std::to_string(budget) + " outside [" +
                            std::to_string(kMinBudget) + ", " + std::to_string(hi) +
                            "] for regime " + regime_name(regime));
  }
  BudgetRoute route;
  route.budget = budget;
  route.regime = regime;
  if (regime == Regime::Default224) {
    if (budget < 64) {
      route.anchors = 16;
      route.kernel = 4;
    } else {
      route.anchors = 64;
      route.kernel = 2;
    }
  } else {
    if (budget < 64) {
      route.anchors = 16;
      route.kernel = 8;
    } else if (budget < 256) {
      route.anchors = 64;
      route.kernel = 4;
    } else {
      route.anchors = 256;
      route.kernel = 2;
    }
  }
  route.queries = budget - route.anchors;
  return route;
}

std::string method_name(SamplingMethod method) {
  switch (method) {
    case SamplingMethod::Parcel: return "parcel";
    case SamplingMethod::Mqt: return "mqt";
    case SamplingMethod::M3: return "m3";
  }
  return "?";
}

SamplingMethod parse_method(const std::string& name) {
  if (name == "parcel") return SamplingMethod::Parcel;
  if (name == "mqt") return SamplingMethod::Mqt;
  if (name == "m3") return SamplingMethod::M3;
  throw std::invalid_argument("unknown method '" + name + "' (parcel | mqt | m3)");
}

std::vector<int> budget_menu(SamplingMethod method, Regime regime) {
  std::vector<int> menu;
  const int hi = max_budget(regime);
  switch (method) {
    case SamplingMethod::Parcel:
      for (int b = kMinBudget; b <= hi; b += 2) menu.push_back(b);
      break;
    case SamplingMethod::Mqt:
      for (int b = 2; b <= hi; b += 2) menu.push_back(b);
      break;
    case SamplingMethod::M3:
      menu = {4, 16, 64, 256};
      if (regime == Regime::High448) menu.push_back(1024);
      break;
  }
  return menu;
}

int sample_budget(Rng& rng, SamplingMethod method, Regime regime) {
  const std::vector<int> menu = budget_menu(method, regime);
  return menu[rng.next_below(menu.size())];
}

int sample_budget(std::uint64_t seed, SamplingMethod method, Regime regime) {
  Rng rng(seed);
  return sample_budget(rng, method, regime);
}

}  // namespace parcel
