#include "parcel/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace parcel {

double RadialProfile::total() const {
  long double sum = 0.0L;
  for (double v : values) sum += v;
  return static_cast<double>(sum);
}

FeatureGrid dc_remove(const FeatureGrid& grid) {
  validate_grid(grid);
  FeatureGrid out = grid;
  const double inv_area = 1.0 / (grid.height * grid.width);
  for (int c = 0; c < grid.channels; ++c) {
    long double sum = 0.0L;
    for (int h = 0; h < grid.height; ++h)
      for (int w = 0; w < grid.width; ++w) sum += grid.at(h, w, c);
    const double mean = static_cast<double>(sum) * inv_area;
    for (int h = 0; h < grid.height; ++h)
      for (int w = 0; w < grid.width; ++w) out.at(h, w, c) -= mean;
  }
  return out;
}

// Twiddle table e^{-2*pi*i*k/n} for k in [0, n).
static std::vector<std::complex<double>> twiddles(int n) {
  std::vector<std::complex<double>> t(n);
  for (int k = 0; k < n; ++k) {
    const double angle = -2.0 * std::numbers::pi * k / n;
    t[k] = {std::cos(angle), std::sin(angle)};
  }
  return t;
}

Spectrum dft2_normalized(const FeatureGrid& grid) {
  const FeatureGrid g = dc_remove(grid);
  const int H = g.height, W = g.width, C = g.channels;
  const auto tw = twiddles(W);
  const auto th = twiddles(H);

  // Separable evaluation: transform along w first, then along h.
  std::vector<std::complex<double>> stage(static_cast<std::size_t>(H) * W * C);
  for (int h = 0; h < H; ++h) {
    for (int v = 0; v < W; ++v) {
      for (int c = 0; c < C; ++c) {
        std::complex<double> acc{0.0, 0.0};
        for (int w = 0; w < W; ++w) {
          acc += g.at(h, w, c) * tw[(static_cast<long long>(v) * w) % W];
        }
        stage[(static_cast<std::size_t>(h) * W + v) * C + c] = acc;
      }
    }
  }

  Spectrum spec;
  spec.height = H;
  spec.width = W;
  spec.channels = C;
  spec.coeffs.resize(stage.size());
  const double norm = 1.0 / (static_cast<double>(H) * W);
  for (int u = 0; u < H; ++u) {
    for (int v = 0; v < W; ++v) {
      for (int c = 0; c < C; ++c) {
        std::complex<double> acc{0.0, 0.0};
        for (int h = 0; h < H; ++h) {
          acc += stage[(static_cast<std::size_t>(h) * W + v) * C + c] *
                 th[(static_cast<long long>(u) * h) % H];
        }
        spec.at(u, v, c) = acc * norm;
      }
    }
  }
  return spec;
}

double parseval_relative_error(const FeatureGrid& grid, const Spectrum& spectrum) {
  if (grid.height != spectrum.height || grid.width != spectrum.width ||
      grid.channels != spectrum.channels) {
    throw std::invalid_argument("parseval_relative_error: shape mismatch");
  }
  const FeatureGrid g = dc_remove(grid);
  double worst = 0.0;
  for (int c = 0; c < g.channels; ++c) {
    long double spectral = 0.0L, spatial = 0.0L;
    for (int u = 0; u < g.height; ++u)
      for (int v = 0; v < g.width; ++v) spectral += std::norm(spectrum.at(u, v, c));
    for (int h = 0; h < g.height; ++h)
      for (int w = 0; w < g.width; ++w) {
        const double x = g.at(h, w, c);
        spatial += static_cast<long double>(x) * x;
      }
    spatial /= static_cast<long double>(g.height) * g.width;
    const double denom = std::max(static_cast<double>(std::max(spectral, spatial)), 1e-300);
    worst = std::max(worst, std::fabs(static_cast<double>(spectral - spatial)) / denom);
  }
  return worst;
}

PowerSpectrum psd(const Spectrum& spectrum) {
  PowerSpectrum s;
  s.height = spectrum.height;
  s.width = spectrum.width;
  s.centered = false;
  s.values.assign(static_cast<std::size_t>(s.height) * s.width, 0.0);
  const double inv_c = 1.0 / spectrum.channels;
  for (int u = 0; u < s.height; ++u)
    for (int v = 0; v < s.width; ++v) {
      long double acc = 0.0L;
      for (int c = 0; c < spectrum.channels; ++c) acc += std::norm(spectrum.at(u, v, c));
      s.at(u, v) = static_cast<double>(acc) * inv_c;
    }
  return s;
}

PowerSpectrum center(const PowerSpectrum& s) {
  if (s.centered) return s;
  PowerSpectrum out = s;
  out.centered = true;
  const int h_shift = s.height / 2;
  const int w_shift = s.width / 2;
  for (int i = 0; i < s.height; ++i)
    for (int j = 0; j < s.width; ++j)
      out.at(i, j) = s.at((i + s.height - h_shift) % s.height,
                          (j + s.width - w_shift) % s.width);
  return out;
}

int inscribed_nyquist_radius(int height, int width) { return std::min(height, width) / 2; }

RadialProfile radial_mean_power(const PowerSpectrum& spectrum) {
  const PowerSpectrum s = center(spectrum);
  const int H = s.height, W = s.width;
  const int r_max = inscribed_nyquist_radius(H, W);

  std::vector<long double> sums(static_cast<std::size_t>(r_max) + 1, 0.0L);
  std::vector<long long> counts(static_cast<std::size_t>(r_max) + 1, 0);

  // Row i of the centered array holds frequency u = i - floor(H/2).
  for (int i = 0; i < H; ++i) {
    const int u = i - H / 2;
    for (int j = 0; j < W; ++j) {
      const int v = j - W / 2;
      const double rho = std::sqrt(static_cast<double>(u) * u + static_cast<double>(v) * v);
      if (rho > static_cast<double>(r_max)) continue;
      // Ring r covers r - 1/2 <= rho < r + 1/2.
      const int r = static_cast<int>(std::floor(rho + 0.5));
      if (r < 1 || r > r_max) continue;
      sums[r] += s.at(i, j);
      counts[r] += 1;
    }
  }

  RadialProfile profile;
  profile.r_max = r_max;
  for (int r = 1; r <= r_max; ++r) {
    if (counts[r] == 0) continue;  // absent ring, never zero-filled
    profile.radii.push_back(r);
    profile.values.push_back(static_cast<double>(sums[r] / counts[r]));
  }
  return profile;
}

RadialProfile normalize_profile(const RadialProfile& p, double epsilon) {
  RadialProfile out = p;
  out.epsilon = epsilon;
  const double denom = p.total() + epsilon;
  for (double& v : out.values) v /= denom;
  out.normalized = true;
  return out;
}

RadialProfile cumulative_concentration(const RadialProfile& normalized) {
  if (!normalized.normalized) {
    throw std::invalid_argument("cumulative_concentration: profile is not normalized");
  }
  RadialProfile out = normalized;
  long double run = 0.0L;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    run += out.values[i];
    out.values[i] = static_cast<double>(run);
  }
  return out;
}

RadialProfile attention_footprint(const FeatureGrid& grid, const Matrix& weights,
                                  double epsilon) {
  validate_grid(grid);
  const int spatial = grid.height * grid.width;
  if (weights.cols != spatial) {
    throw std::invalid_argument("attention_footprint: weights cols " +
                                std::to_string(weights.cols) + " != H*W " +
                                std::to_string(spatial));
  }
  if (weights.rows < 1) {
    throw std::invalid_argument("attention_footprint: need at least one query row");
  }
  for (double v : weights.data) {
    if (v < 0.0) throw std::invalid_argument("attention_footprint: negative weight");
  }

  PowerSpectrum mean_psd;
  for (int q = 0; q < weights.rows; ++q) {
    long double sum = 0.0L;
    for (int t = 0; t < spatial; ++t) sum += weights.at(q, t);
    const double inv_mean = 1.0 / (static_cast<double>(sum) / spatial + epsilon);

    FeatureGrid weighted = grid;
    for (int h = 0; h < grid.height; ++h)
      for (int w = 0; w < grid.width; ++w) {
        const double a = weights.at(q, h * grid.width + w) * inv_mean;
        for (int c = 0; c < grid.channels; ++c) weighted.at(h, w, c) *= a;
      }

    const PowerSpectrum s = psd(dft2_normalized(weighted));
    if (q == 0) {
      mean_psd = s;
    } else {
      for (std::size_t i = 0; i < s.values.size(); ++i) mean_psd.values[i] += s.values[i];
    }
  }
  for (double& v : mean_psd.values) v /= weights.rows;

  return normalize_profile(radial_mean_power(mean_psd), epsilon);
}

RadialProfile dataset_average(const std::vector<RadialProfile>& profiles) {
  if (profiles.empty()) throw std::invalid_argument("dataset_average: no profiles");
  const RadialProfile& first = profiles.front();
  for (const RadialProfile& p : profiles) {
    if (p.r_max != first.r_max || p.radii != first.radii) {
      throw std::invalid_argument("dataset_average: mismatched r_max or ring support");
    }
  }
  RadialProfile out = first;
  // Fixed sequential accumulation order, for bitwise determinism.
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    long double acc = 0.0L;
    for (const RadialProfile& p : profiles) acc += p.values[i];
    out.values[i] = static_cast<double>(acc / profiles.size());
  }
  return out;
}

RadialProfile grid_radial_profile(const FeatureGrid& grid, double epsilon) {
  return normalize_profile(radial_mean_power(psd(dft2_normalized(grid))), epsilon);
}

}  // namespace parcel
