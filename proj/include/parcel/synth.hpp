#pragma once

#include <cstdint>
#include <string>

#include "parcel/feature_grid.hpp"

namespace parcel {

// Seeded synthetic feature grids so every analysis runs without model
// weights: white Gaussian noise, integer-frequency cosine modes, or a
// single spatial impulse per channel.
enum class SynthKind { Gaussian, Cosine, Impulse, Constant };

SynthKind parse_synth_kind(const std::string& name);

struct SynthSpec {
  SynthKind kind = SynthKind::Gaussian;
  int height = 16;
  int width = 16;
  int channels = 4;
  std::uint64_t seed = 0;
  int freq_h = 0;   // cosine mode along h
  int freq_w = 3;   // cosine mode along w
  double value = 1.0;  // constant fill / impulse amplitude
};

FeatureGrid make_synthetic_grid(const SynthSpec& spec);

}  // namespace parcel
