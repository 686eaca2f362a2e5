#pragma once

#include <span>
#include <string>
#include <vector>

#include "spectra/grid.hpp"
#include "spectra/spectral.hpp"

namespace spectra {

/// Zonal (u, along x / columns) and meridional (v, along y / rows) wind on
/// one grid. Both members are single-channel fields.
class WindPair {
 public:
  WindPair(GridField u, GridField v);

  /// Picks channels named "u"/"u10" and "v"/"v10".
  static WindPair from_field(const GridField& field);

  const GridField& u() const noexcept { return u_; }
  const GridField& v() const noexcept { return v_; }
  std::size_t height() const noexcept { return u_.height(); }
  std::size_t width() const noexcept { return u_.width(); }
  double dx() const noexcept { return u_.dx(); }

 private:
  GridField u_;
  GridField v_;
};

enum class DerivativeMethod { Spectral, CentralFD };

/// Periodic first derivative of one plane; central_fd uses the
/// second-order stencil (q[j+1] - q[j-1]) / (2 dx).
std::vector<double> derivative(std::span<const double> plane, std::size_t height,
                               std::size_t width, double dx, Axis axis, DerivativeMethod method);

/// E_h = (u^2 + v^2) / 2.
GridField kinetic_energy(const WindPair& wind);
/// delta_h = du/dx + dv/dy.
GridField divergence(const WindPair& wind, DerivativeMethod method = DerivativeMethod::Spectral);
/// zeta_h = dv/dx - du/dy.
GridField vorticity(const WindPair& wind, DerivativeMethod method = DerivativeMethod::Spectral);

/// Rotational, divergent and harmonic parts; u = u_rot + u_div + mean_u.
///
/// The harmonic part holds every mode annihilated by both discrete div and
/// curl: the mean flow, plus the corner Nyquist mode on even grids.
struct HelmholtzParts {
  GridField u_rot;
  GridField v_rot;
  GridField u_div;
  GridField v_div;
  GridField mean_u;
  GridField mean_v;
};

HelmholtzParts helmholtz_decompose(const WindPair& wind);

/// Divergence power spectrum from the Fourier coefficients of u and v:
/// kx^2|U|^2 + ky^2|V|^2 + 2 kx ky Re(U V*), normalized like psd(). Uses the
/// same Nyquist-zeroed wavenumbers as the spectral derivative.
PSDGrid divergence_power_spectrum(const WindPair& wind);

/// Channels u, v, [t2m], Eh, div, vort for one sample. Wind channels may be
/// named u/u10 and v/v10; t2m is included only when present.
GridField diagnostic_variables(const GridField& field,
                               DerivativeMethod method = DerivativeMethod::Spectral);

/// Log floor used when comparing spectra of `variable`. `epsilon` is given in
/// the squared units of the wind and temperature fields; the derivative
/// variables div and vort carry an extra 1/length^2, so their floor is
/// epsilon / dx^2.
double log_floor(const std::string& variable, double epsilon, double dx);

struct DiagnosticsOptions {
  DerivativeMethod method = DerivativeMethod::Spectral;
  std::size_t n_bins = 0;  // 0 selects default_bin_count()
  BinScale scale = BinScale::Log;
  double epsilon = 1e-12;
};

struct VariableSpectra {
  std::string name;
  RadialSpectrum truth;
  RadialSpectrum pred;
  /// log(pred + eps) - log(truth + eps) per bin; unused for empty bins.
  std::vector<double> log_gap;
};

struct DiagnosticsReport {
  std::vector<VariableSpectra> variables;
  const VariableSpectra& find(const std::string& name) const;
};

/// Radial spectra of the diagnostic variables, averaged over samples.
DiagnosticsReport diagnostics_report(std::span<const GridField> truth,
                                     std::span<const GridField> pred,
                                     const DiagnosticsOptions& options = {});
DiagnosticsReport diagnostics_report(const GridField& truth, const GridField& pred,
                                     const DiagnosticsOptions& options = {});

}  // namespace spectra
