#include "parcel/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "parcel/rng.hpp"

namespace parcel {

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "gaussian") return SynthKind::Gaussian;
  if (name == "cosine") return SynthKind::Cosine;
  if (name == "impulse") return SynthKind::Impulse;
  if (name == "constant") return SynthKind::Constant;
  throw std::invalid_argument("unknown synth kind '" + name +
                              "' (gaussian | cosine | impulse | constant)");
}

FeatureGrid make_synthetic_grid(const SynthSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.channels < 1) {
    throw std::invalid_argument("make_synthetic_grid: dims must be >= 1");
  }
  FeatureGrid grid(spec.height, spec.width, spec.channels);
  Rng rng(spec.seed);
  switch (spec.kind) {
    case SynthKind::Gaussian:
      for (double& v : grid.values) v = rng.next_normal();
      break;
    case SynthKind::Cosine:
      for (int h = 0; h < spec.height; ++h)
        for (int w = 0; w < spec.width; ++w) {
          const double phase = 2.0 * std::numbers::pi *
                               (static_cast<double>(spec.freq_h) * h / spec.height +
                                static_cast<double>(spec.freq_w) * w / spec.width);
          const double v = spec.value * std::cos(phase);
          for (int c = 0; c < spec.channels; ++c) grid.at(h, w, c) = v;
        }
      break;
    case SynthKind::Impulse:
      for (int c = 0; c < spec.channels; ++c)
        grid.at(spec.height / 2, spec.width / 2, c) = spec.value;
      break;
    case SynthKind::Constant:
      for (double& v : grid.values) v = spec.value;
      break;
  }
  return grid;
}

}  // namespace parcel
