#pragma once

#include <complex>
#include <vector>

#include "parcel/feature_grid.hpp"
#include "parcel/matrix.hpp"

namespace parcel {

constexpr double kSpectralEpsilon = 1e-15;

// Per-channel complex DFT coefficients, standard (uncentered) frequency
// order, layout (u, v, c) with c innermost.
struct Spectrum {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::complex<double>> coeffs;

  std::complex<double>& at(int u, int v, int c) {
    return coeffs[(static_cast<std::size_t>(u) * width + v) * channels + c];
  }
  std::complex<double> at(int u, int v, int c) const {
    return coeffs[(static_cast<std::size_t>(u) * width + v) * channels + c];
  }
};

// Channel-averaged power spectrum S(u,v). `centered` says whether the DC
// bin has been shifted to the spatial origin.
struct PowerSpectrum {
  int height = 0;
  int width = 0;
  bool centered = false;
  std::vector<double> values;  // height * width

  double& at(int u, int v) { return values[static_cast<std::size_t>(u) * width + v]; }
  double at(int u, int v) const { return values[static_cast<std::size_t>(u) * width + v]; }
};

// Radial mean-power profile. Radii run over 1..r_max; empty rings are
// omitted (absent radius), never reported as zero.
struct RadialProfile {
  int r_max = 0;
  std::vector<int> radii;      // ascending, subset of 1..r_max
  std::vector<double> values;  // parallel to radii
  bool normalized = false;
  double epsilon = kSpectralEpsilon;

  double total() const;
};

// Subtract each channel's spatial mean.
FeatureGrid dc_remove(const FeatureGrid& grid);

// Forward normalized 2D DFT with the 1/(H*W) factor. DC removal is applied
// internally, so the (0,0) coefficient is always ~0. Separable row-column
// evaluation; matches the double-sum definition.
Spectrum dft2_normalized(const FeatureGrid& grid);

// Larger side of Parseval mismatch over channels:
// max_c |sum|F_c|^2 - mean|x_c~|^2| / denom.
double parseval_relative_error(const FeatureGrid& grid, const Spectrum& spectrum);

// S(u,v) = (1/C) sum_c |F_c(u,v)|^2, uncentered.
PowerSpectrum psd(const Spectrum& spectrum);

// Move DC to the centered origin (fftshift).
PowerSpectrum center(const PowerSpectrum& s);

int inscribed_nyquist_radius(int height, int width);  // floor(min(H,W)/2)

// Mean PSD over unit-width rings r-1/2 <= rho < r+1/2 with rho <= r_max,
// in zero-centered frequency coordinates. Accepts centered or uncentered
// input (centers internally).
RadialProfile radial_mean_power(const PowerSpectrum& spectrum);

// P_hat(r) = P(r) / (sum_k P(k) + epsilon).
RadialProfile normalize_profile(const RadialProfile& p, double epsilon = kSpectralEpsilon);

// Prefix sums of a normalized profile. Throws on unnormalized input.
RadialProfile cumulative_concentration(const RadialProfile& normalized);

// Attention-weighted query footprint: per query, rescale its spatial
// attention map to unit mean, weight the source grid with it, take the
// PSD, average the PSDs over queries, then radial mean power + normalize.
// weights: N_q x (H*W), rows nonnegative, spatial row-major.
RadialProfile attention_footprint(const FeatureGrid& grid, const Matrix& weights,
                                  double epsilon = kSpectralEpsilon);

// Pointwise mean per radius, fixed input-order accumulation. All profiles
// must share r_max and the same set of radii.
RadialProfile dataset_average(const std::vector<RadialProfile>& profiles);

// Radial profile of a grid: dft2 -> psd -> radial -> normalize.
RadialProfile grid_radial_profile(const FeatureGrid& grid, double epsilon = kSpectralEpsilon);

}  // namespace parcel
