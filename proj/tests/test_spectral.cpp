#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "parcel/rng.hpp"
#include "parcel/spectral.hpp"
#include "parcel/synth.hpp"

using namespace parcel;

namespace {

FeatureGrid random_grid(int h, int w, int c, Rng& rng) {
  FeatureGrid grid(h, w, c);
  for (double& v : grid.values) v = rng.next_normal();
  return grid;
}

}  // namespace

TEST_CASE("dc removal zeroes every channel mean") {
  FeatureGrid constant(5, 7, 2);
  for (double& v : constant.values) v = 4.5;
  const FeatureGrid removed = dc_remove(constant);
  for (double v : removed.values) CHECK(std::fabs(v) < 1e-12);

  Rng rng(71);
  const FeatureGrid grid = random_grid(6, 5, 2, rng);
  const FeatureGrid centered = dc_remove(grid);
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (int h = 0; h < 6; ++h)
      for (int w = 0; w < 5; ++w) mean += centered.at(h, w, c);
    CHECK(std::fabs(mean / 30) < 1e-9);
  }
}

TEST_CASE("transform of a zero grid is zero") {
  const FeatureGrid zeros(4, 4, 2);
  const Spectrum s = dft2_normalized(zeros);
  for (const auto& z : s.coeffs) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("cosine mode lands on exactly two coefficients") {
  // cos(2*pi*f*w/N) along a 1xN strip: coefficients 0.5 at v=f and v=N-f.
  SynthSpec spec;
  spec.kind = SynthKind::Cosine;
  spec.height = 1;
  spec.width = 16;
  spec.channels = 1;
  spec.freq_h = 0;
  spec.freq_w = 3;
  const FeatureGrid grid = make_synthetic_grid(spec);
  const Spectrum s = dft2_normalized(grid);
  for (int v = 0; v < 16; ++v) {
    const double mag = std::abs(s.at(0, v, 0));
    if (v == 3 || v == 13) {
      CHECK(mag == doctest::Approx(0.5).epsilon(1e-9));
    } else {
      CHECK(mag < 1e-12);
    }
  }
}

TEST_CASE("transform matches the brute-force double sum") {
  Rng rng(72);
  for (int trial = 0; trial < 5; ++trial) {
    const FeatureGrid grid = random_grid(8, 8, 1, rng);
    CHECK(oracles::max_coeff_diff(dft2_normalized(grid), oracles::dft2_reference(grid)) <
          1e-9);
  }
  const FeatureGrid rect = random_grid(6, 8, 3, rng);
  CHECK(oracles::max_coeff_diff(dft2_normalized(rect), oracles::dft2_reference(rect)) < 1e-9);
}

TEST_CASE("energy is conserved through the transform") {
  Rng rng(73);
  for (const auto& shape : {std::pair{32, 32}, std::pair{16, 8}, std::pair{7, 9}}) {
    const FeatureGrid grid = random_grid(shape.first, shape.second, 8, rng);
    CHECK(parseval_relative_error(grid, dft2_normalized(grid)) < 1e-6);
  }
}

TEST_CASE("channel-averaged power spectrum") {
  Rng rng(74);
  const FeatureGrid one = random_grid(6, 6, 1, rng);
  const Spectrum s1 = dft2_normalized(one);
  const PowerSpectrum p1 = psd(s1);
  for (int u = 0; u < 6; ++u)
    for (int v = 0; v < 6; ++v)
      CHECK(p1.at(u, v) == doctest::Approx(std::norm(s1.at(u, v, 0))).epsilon(1e-12));

  // Duplicating the channel leaves the average unchanged.
  FeatureGrid two(6, 6, 2);
  for (int h = 0; h < 6; ++h)
    for (int w = 0; w < 6; ++w) {
      two.at(h, w, 0) = one.at(h, w, 0);
      two.at(h, w, 1) = one.at(h, w, 0);
    }
  const PowerSpectrum p2 = psd(dft2_normalized(two));
  for (int u = 0; u < 6; ++u)
    for (int v = 0; v < 6; ++v) CHECK(p2.at(u, v) == doctest::Approx(p1.at(u, v)).epsilon(1e-12));
}

TEST_CASE("centering moves DC to the spatial middle") {
  PowerSpectrum s;
  s.height = 4;
  s.width = 6;
  s.centered = false;
  s.values.assign(24, 0.0);
  s.at(0, 0) = 7.0;
  const PowerSpectrum c = center(s);
  CHECK(c.centered);
  CHECK(c.at(2, 3) == 7.0);
  double total = 0.0;
  for (double v : c.values) total += v;
  CHECK(total == 7.0);
}

TEST_CASE("documented Nyquist radii") {
  CHECK(inscribed_nyquist_radius(16, 16) == 8);
  CHECK(inscribed_nyquist_radius(8, 8) == 4);
  CHECK(inscribed_nyquist_radius(16, 8) == 4);
  CHECK(inscribed_nyquist_radius(5, 9) == 2);
}

TEST_CASE("white power spectrum gives a flat radial profile") {
  PowerSpectrum s;
  s.height = 16;
  s.width = 16;
  s.centered = false;
  s.values.assign(256, 1.0);
  const RadialProfile p = radial_mean_power(s);
  CHECK(p.r_max == 8);
  CHECK(p.radii.size() == 8);
  for (double v : p.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("an impulse at frequency (3,0) feeds only ring three") {
  PowerSpectrum s;
  s.height = 16;
  s.width = 16;
  s.centered = false;
  s.values.assign(256, 0.0);
  s.at(3, 0) = 7.0;
  const RadialProfile p = radial_mean_power(s);

  // Membership oracle: count lattice points with 2.5 <= rho < 3.5.
  int ring3 = 0;
  for (int u = -8; u < 8; ++u)
    for (int v = -8; v < 8; ++v) {
      const double rho = std::sqrt(static_cast<double>(u) * u + static_cast<double>(v) * v);
      if (rho >= 2.5 && rho < 3.5 && rho <= 8.0) ++ring3;
    }
  REQUIRE(ring3 == 16);

  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    if (p.radii[i] == 3) {
      CHECK(p.values[i] == doctest::Approx(7.0 / 16).epsilon(1e-12));
    } else {
      CHECK(p.values[i] == 0.0);
    }
  }
}

TEST_CASE("ring means recover per-ring sums against a membership oracle") {
  // Encode each bin's ring by putting rho^2 in the PSD and re-deriving the
  // expected ring means from an independent lattice walk.
  Rng rng(83);
  for (const auto& shape : {std::pair{16, 16}, std::pair{8, 12}, std::pair{9, 7}}) {
    const int h_n = shape.first, w_n = shape.second;
    const int r_max = inscribed_nyquist_radius(h_n, w_n);

    PowerSpectrum s;
    s.height = h_n;
    s.width = w_n;
    s.centered = true;
    s.values.assign(static_cast<std::size_t>(h_n) * w_n, 0.0);

    std::vector<double> sums(static_cast<std::size_t>(r_max) + 1, 0.0);
    std::vector<int> counts(static_cast<std::size_t>(r_max) + 1, 0);
    for (int i = 0; i < h_n; ++i)
      for (int j = 0; j < w_n; ++j) {
        const double value = rng.next_unit();
        s.at(i, j) = value;
        const int u = i - h_n / 2;
        const int v = j - w_n / 2;
        const double rho = std::sqrt(static_cast<double>(u) * u + static_cast<double>(v) * v);
        if (rho > r_max) continue;
        const int r = static_cast<int>(std::floor(rho + 0.5));
        if (r < 1 || r > r_max) continue;
        sums[static_cast<std::size_t>(r)] += value;
        counts[static_cast<std::size_t>(r)] += 1;
      }

    const RadialProfile p = radial_mean_power(s);
    CHECK(p.r_max == r_max);
    std::size_t cursor = 0;
    for (int r = 1; r <= r_max; ++r) {
      if (counts[static_cast<std::size_t>(r)] == 0) continue;
      REQUIRE(cursor < p.radii.size());
      CHECK(p.radii[cursor] == r);
      CHECK(p.values[cursor] ==
            doctest::Approx(sums[static_cast<std::size_t>(r)] /
                            counts[static_cast<std::size_t>(r)])
                .epsilon(1e-12));
      ++cursor;
    }
    CHECK(cursor == p.radii.size());
  }
}

TEST_CASE("profile normalization and its documented cases") {
  RadialProfile p;
  p.r_max = 2;
  p.radii = {1, 2};
  p.values = {2.0, 2.0};
  const RadialProfile n = normalize_profile(p);
  CHECK(n.normalized);
  CHECK(n.values[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n.values[1] == doctest::Approx(0.5).epsilon(1e-12));

  RadialProfile zeros;
  zeros.r_max = 3;
  zeros.radii = {1, 2, 3};
  zeros.values = {0.0, 0.0, 0.0};
  const RadialProfile nz = normalize_profile(zeros);
  for (double v : nz.values) CHECK(v == 0.0);

  Rng rng(75);
  RadialProfile random;
  random.r_max = 6;
  for (int r = 1; r <= 6; ++r) {
    random.radii.push_back(r);
    random.values.push_back(rng.next_unit() + 0.1);
  }
  const RadialProfile nr = normalize_profile(random);
  double total = 0.0, raw = 0.0;
  for (double v : nr.values) total += v;
  for (double v : random.values) raw += v;
  CHECK(std::fabs(total - raw / (raw + kSpectralEpsilon)) < 1e-12);
}

TEST_CASE("cumulative concentration on documented cases") {
  RadialProfile step;
  step.r_max = 3;
  step.radii = {1, 2, 3};
  step.values = {1.0, 0.0, 0.0};
  step.normalized = true;
  const RadialProfile cs = cumulative_concentration(step);
  CHECK(cs.values == std::vector<double>{1.0, 1.0, 1.0});

  RadialProfile uniform;
  uniform.r_max = 4;
  uniform.radii = {1, 2, 3, 4};
  uniform.values = {0.25, 0.25, 0.25, 0.25};
  uniform.normalized = true;
  const RadialProfile cu = cumulative_concentration(uniform);
  CHECK(cu.values[0] == doctest::Approx(0.25));
  CHECK(cu.values[1] == doctest::Approx(0.5));
  CHECK(cu.values[2] == doctest::Approx(0.75));
  CHECK(cu.values[3] == doctest::Approx(1.0));

  RadialProfile raw;
  raw.r_max = 2;
  raw.radii = {1, 2};
  raw.values = {1.0, 2.0};
  CHECK_THROWS_AS(cumulative_concentration(raw), std::invalid_argument);
}

TEST_CASE("concentration is monotone and ends at the normalized total") {
  Rng rng(76);
  for (int trial = 0; trial < 10; ++trial) {
    const FeatureGrid grid = random_grid(16, 16, 2, rng);
    const RadialProfile normalized = grid_radial_profile(grid);
    const RadialProfile c = cumulative_concentration(normalized);
    for (std::size_t i = 1; i < c.values.size(); ++i) CHECK(c.values[i] >= c.values[i - 1]);
    CHECK(std::fabs(c.values.back() - normalized.total()) < 1e-9);
  }
}

TEST_CASE("uniform attention reproduces the grid profile") {
  Rng rng(77);
  const FeatureGrid grid = random_grid(16, 16, 4, rng);
  Matrix weights(3, 256);
  for (double& v : weights.data) v = 1.0;
  const RadialProfile footprint = attention_footprint(grid, weights);
  const RadialProfile direct = grid_radial_profile(grid);
  REQUIRE(footprint.radii == direct.radii);
  for (std::size_t i = 0; i < footprint.values.size(); ++i)
    CHECK(std::fabs(footprint.values[i] - direct.values[i]) < 1e-9);
}

TEST_CASE("a concentrated attention map broadens the footprint") {
  Rng rng(78);
  // Smooth low-frequency grid: cosine mode at r=1.
  SynthSpec spec;
  spec.kind = SynthKind::Cosine;
  spec.height = 16;
  spec.width = 16;
  spec.channels = 1;
  spec.freq_h = 0;
  spec.freq_w = 1;
  const FeatureGrid grid = make_synthetic_grid(spec);

  Matrix concentrated(1, 256);
  concentrated.at(0, 17) = 256.0;  // all mass on one source position

  const RadialProfile fp = attention_footprint(grid, concentrated);
  const RadialProfile base = grid_radial_profile(grid);
  const RadialProfile cf = cumulative_concentration(fp);
  const RadialProfile cb = cumulative_concentration(base);
  // The grid alone concentrates at r=1; the one-hot weighting spreads mass
  // to higher rings, so low-r concentration strictly drops.
  CHECK(cb.values[0] > 0.99);
  CHECK(cf.values[0] < cb.values[0]);
}

TEST_CASE("duplicate query rows do not change the footprint") {
  Rng rng(79);
  const FeatureGrid grid = random_grid(8, 8, 2, rng);
  Matrix one(1, 64);
  for (int j = 0; j < 64; ++j) one.at(0, j) = rng.next_unit() + 0.05;
  Matrix two(2, 64);
  for (int j = 0; j < 64; ++j) {
    two.at(0, j) = one.at(0, j);
    two.at(1, j) = one.at(0, j);
  }
  const RadialProfile a = attention_footprint(grid, one);
  const RadialProfile b = attention_footprint(grid, two);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12));
}

TEST_CASE("footprint validates its weight matrix") {
  Rng rng(80);
  const FeatureGrid grid = random_grid(8, 8, 2, rng);
  Matrix bad_shape(2, 63);
  CHECK_THROWS_AS(attention_footprint(grid, bad_shape), std::invalid_argument);
  Matrix negative(1, 64);
  negative.at(0, 3) = -0.5;
  CHECK_THROWS_AS(attention_footprint(grid, negative), std::invalid_argument);
  Matrix empty(0, 64);
  CHECK_THROWS_AS(attention_footprint(grid, empty), std::invalid_argument);
}

TEST_CASE("dataset averaging is a plain pointwise mean") {
  RadialProfile a;
  a.r_max = 2;
  a.radii = {1, 2};
  a.values = {1.0, 3.0};
  RadialProfile b = a;
  b.values = {3.0, 1.0};
  const RadialProfile mean = dataset_average({a, b});
  CHECK(mean.values[0] == doctest::Approx(2.0));
  CHECK(mean.values[1] == doctest::Approx(2.0));

  const RadialProfile solo = dataset_average({a});
  CHECK(solo.values == a.values);

  RadialProfile mismatched = a;
  mismatched.r_max = 3;
  CHECK_THROWS_AS(dataset_average({a, mismatched}), std::invalid_argument);
}

TEST_CASE("dataset averaging matches a pairwise-sum oracle") {
  Rng rng(81);
  std::vector<RadialProfile> profiles;
  for (int i = 0; i < 100; ++i) {
    RadialProfile p;
    p.r_max = 4;
    p.radii = {1, 2, 3, 4};
    for (int r = 0; r < 4; ++r) p.values.push_back(rng.next_unit());
    profiles.push_back(p);
  }
  const RadialProfile mean = dataset_average(profiles);
  for (int r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (const RadialProfile& p : profiles) sum += p.values[r];
    CHECK(std::fabs(mean.values[r] - sum / 100) < 1e-12);
  }
}

TEST_CASE("normalized profiles ignore grid scaling") {
  Rng rng(82);
  const FeatureGrid grid = random_grid(12, 12, 3, rng);
  FeatureGrid scaled = grid;
  for (double& v : scaled.values) v *= 37.5;
  const RadialProfile a = grid_radial_profile(grid);
  const RadialProfile b = grid_radial_profile(scaled);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(std::fabs(a.values[i] - b.values[i]) < 1e-9);
}
