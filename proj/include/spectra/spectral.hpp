#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "spectra/grid.hpp"

namespace spectra {

using cplx = std::complex<double>;

/// Full two-sided 2D Fourier coefficients of one channel, unnormalized
/// forward convention: coeff(0,0) is the plain sum of the field.
struct Spectrum {
  std::size_t height = 0;
  std::size_t width = 0;
  double dx = 1.0;
  std::vector<cplx> coeffs;

  cplx at(std::size_t kh, std::size_t kw) const { return coeffs[kh * width + kw]; }
};

/// Per-mode power |F|^2 / (H W dx).
struct PSDGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  double dx = 1.0;
  std::vector<double> power;

  double at(std::size_t kh, std::size_t kw) const { return power[kh * width + kw]; }
};

/// Physical and dimensionless wavenumbers under the signed-frequency mapping.
struct WavenumberGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  double dx = 1.0;
  std::vector<double> kappa_x;  // rad/m, varies along columns
  std::vector<double> kappa_y;  // rad/m, varies along rows
  std::vector<double> kappa;
  std::vector<double> k_index;  // sqrt(s(kh)^2 + s(kw)^2)
};

enum class Axis { X, Y };
enum class BinScale { Linear, Log };

struct RadialSpectrum {
  std::vector<double> bin_edges;    // n_bins + 1 edges in k_index units
  std::vector<double> bin_centers;  // mean k_index of member modes (edge midpoint when empty)
  std::vector<double> bin_power;    // mean PSD over member modes, 0 when empty
  std::vector<std::size_t> bin_counts;

  std::size_t size() const noexcept { return bin_power.size(); }
};

/// Maps a DFT index in [0, n) to its signed frequency in [-n/2, n/2).
long signed_frequency(std::size_t index, std::size_t n);

/// Largest k_index on an H x W grid.
double max_k_index(std::size_t height, std::size_t width);

Spectrum dft2(std::span<const double> plane, std::size_t height, std::size_t width, double dx);
Spectrum dft2(const GridField& field, std::size_t channel);

/// Inverse transform including the 1/(H W) factor; complex result.
std::vector<cplx> inverse_dft2(const Spectrum& spectrum);
/// Real part of inverse_dft2.
std::vector<double> inverse_dft2_real(const Spectrum& spectrum);

PSDGrid psd(const Spectrum& spectrum);
PSDGrid psd(const GridField& field, std::size_t channel);

WavenumberGrid wavenumber_grid(std::size_t height, std::size_t width, double dx);

/// Physical wavenumber used by the spectral derivative along `axis`, with the
/// Nyquist entry of an even-length axis set to zero.
std::vector<double> derivative_wavenumbers(std::size_t height, std::size_t width, double dx,
                                           Axis axis);

std::vector<double> spectral_derivative(std::span<const double> plane, std::size_t height,
                                        std::size_t width, double dx, Axis axis);
/// Single-channel derivative field named "d<name>/dx" or "d<name>/dy".
GridField spectral_derivative(const GridField& field, std::size_t channel, Axis axis);

std::size_t default_bin_count(std::size_t height, std::size_t width);

/// Isotropic binning of a PSD grid over k_index. The DC mode is excluded and
/// every other mode lands in exactly one bin. Linear bins split (0, k_max]
/// evenly; log bins split [1, k_max] geometrically.
RadialSpectrum radial_bin(const PSDGrid& grid, std::size_t n_bins, BinScale scale = BinScale::Log);

/// Element-wise mean of radial spectra sharing the same binning.
RadialSpectrum mean_radial(std::span<const RadialSpectrum> spectra);

}  // namespace spectra
