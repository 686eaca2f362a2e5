#include "spectra/physics.hpp"

#include <cmath>

#include "spectra/error.hpp"

namespace spectra {
namespace {

GridField plane_field(std::vector<double> values, const WindPair& w, std::string name) {
  return make_field(std::move(values), w.height(), w.width(), w.dx(), {std::move(name)});
}

std::vector<double> central_difference(std::span<const double> q, std::size_t height,
                                       std::size_t width, double dx, Axis axis) {
  std::vector<double> out(q.size());
  const double inv = 1.0 / (2.0 * dx);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      double fwd, bwd;
      if (axis == Axis::X) {
        fwd = q[i * width + (j + 1) % width];
        bwd = q[i * width + (j + width - 1) % width];
      } else {
        fwd = q[((i + 1) % height) * width + j];
        bwd = q[((i + height - 1) % height) * width + j];
      }
      out[i * width + j] = (fwd - bwd) * inv;
    }
  }
  return out;
}

std::optional<std::size_t> find_any(const GridField& f, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (auto idx = f.find_channel(n)) return idx;
  }
  return std::nullopt;
}

}  // namespace

WindPair::WindPair(GridField u, GridField v) : u_(std::move(u)), v_(std::move(v)) {
  require_same_grid(u_, v_, "WindPair");
  if (u_.channels() != 1 || v_.channels() != 1) {
    fail(ErrorCode::ChannelMismatch, "WindPair members must be single-channel fields");
  }
}

WindPair WindPair::from_field(const GridField& field) {
  auto iu = find_any(field, {"u", "u10"});
  auto iv = find_any(field, {"v", "v10"});
  if (!iu || !iv) fail(ErrorCode::ChannelOutOfRange, "field has no u/v wind channels");
  return WindPair(field.extract(*iu), field.extract(*iv));
}

std::vector<double> derivative(std::span<const double> plane, std::size_t height,
                               std::size_t width, double dx, Axis axis, DerivativeMethod method) {
  if (method == DerivativeMethod::Spectral) {
    return spectral_derivative(plane, height, width, dx, axis);
  }
  return central_difference(plane, height, width, dx, axis);
}

GridField kinetic_energy(const WindPair& wind) {
  auto u = wind.u().channel(0);
  auto v = wind.v().channel(0);
  std::vector<double> e(u.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = 0.5 * (u[i] * u[i] + v[i] * v[i]);
  return plane_field(std::move(e), wind, "Eh");
}

GridField divergence(const WindPair& wind, DerivativeMethod method) {
  const auto h = wind.height(), w = wind.width();
  auto dudx = derivative(wind.u().channel(0), h, w, wind.dx(), Axis::X, method);
  auto dvdy = derivative(wind.v().channel(0), h, w, wind.dx(), Axis::Y, method);
  for (std::size_t i = 0; i < dudx.size(); ++i) dudx[i] += dvdy[i];
  return plane_field(std::move(dudx), wind, "div");
}

GridField vorticity(const WindPair& wind, DerivativeMethod method) {
  const auto h = wind.height(), w = wind.width();
  auto dvdx = derivative(wind.v().channel(0), h, w, wind.dx(), Axis::X, method);
  auto dudy = derivative(wind.u().channel(0), h, w, wind.dx(), Axis::Y, method);
  for (std::size_t i = 0; i < dvdx.size(); ++i) dvdx[i] -= dudy[i];
  return plane_field(std::move(dvdx), wind, "vort");
}

HelmholtzParts helmholtz_decompose(const WindPair& wind) {
  const auto h = wind.height(), w = wind.width();
  const double dx = wind.dx();
  const Spectrum su = dft2(wind.u(), 0);
  const Spectrum sv = dft2(wind.v(), 0);
  const auto kx = derivative_wavenumbers(h, w, dx, Axis::X);
  const auto ky = derivative_wavenumbers(h, w, dx, Axis::Y);

  Spectrum u_rot = su, v_rot = su, u_div = su, v_div = su, u_har = su, v_har = su;
  const cplx i_unit(0.0, 1.0);
  for (std::size_t m = 0; m < su.coeffs.size(); ++m) {
    const double k2 = kx[m] * kx[m] + ky[m] * ky[m];
    const cplx uh = su.coeffs[m], vh = sv.coeffs[m];
    if (k2 == 0.0) {
      u_rot.coeffs[m] = v_rot.coeffs[m] = u_div.coeffs[m] = v_div.coeffs[m] = 0.0;
      u_har.coeffs[m] = uh;
      v_har.coeffs[m] = vh;
      continue;
    }
    // Poisson solves: lap(psi) = zeta, lap(chi) = delta.
    const cplx zeta = i_unit * kx[m] * vh - i_unit * ky[m] * uh;
    const cplx delta = i_unit * kx[m] * uh + i_unit * ky[m] * vh;
    const cplx psi = -zeta / k2;
    const cplx chi = -delta / k2;
    u_rot.coeffs[m] = -i_unit * ky[m] * psi;
    v_rot.coeffs[m] = i_unit * kx[m] * psi;
    u_div.coeffs[m] = i_unit * kx[m] * chi;
    v_div.coeffs[m] = i_unit * ky[m] * chi;
    u_har.coeffs[m] = v_har.coeffs[m] = 0.0;
  }
  auto real_field = [&](const Spectrum& s, const char* name) {
    return plane_field(inverse_dft2_real(s), wind, name);
  };
  return HelmholtzParts{real_field(u_rot, "u_rot"), real_field(v_rot, "v_rot"),
                        real_field(u_div, "u_div"), real_field(v_div, "v_div"),
                        real_field(u_har, "mean_u"), real_field(v_har, "mean_v")};
}

PSDGrid divergence_power_spectrum(const WindPair& wind) {
  const auto h = wind.height(), w = wind.width();
  const Spectrum su = dft2(wind.u(), 0);
  const Spectrum sv = dft2(wind.v(), 0);
  const auto kx = derivative_wavenumbers(h, w, wind.dx(), Axis::X);
  const auto ky = derivative_wavenumbers(h, w, wind.dx(), Axis::Y);
  PSDGrid g{h, w, wind.dx(), std::vector<double>(h * w)};
  const double norm = 1.0 / (static_cast<double>(h * w) * wind.dx());
  for (std::size_t m = 0; m < g.power.size(); ++m) {
    const cplx uh = su.coeffs[m], vh = sv.coeffs[m];
    const double value = kx[m] * kx[m] * std::norm(uh) + ky[m] * ky[m] * std::norm(vh) +
                         2.0 * kx[m] * ky[m] * (uh * std::conj(vh)).real();
    g.power[m] = value * norm;
  }
  return g;
}

GridField diagnostic_variables(const GridField& field, DerivativeMethod method) {
  const WindPair wind = WindPair::from_field(field);
  std::vector<GridField> parts;
  parts.push_back(make_field(std::vector<double>(wind.u().values().begin(), wind.u().values().end()),
                             field.height(), field.width(), field.dx(), {"u"}));
  parts.push_back(make_field(std::vector<double>(wind.v().values().begin(), wind.v().values().end()),
                             field.height(), field.width(), field.dx(), {"v"}));
  if (auto it = field.find_channel("t2m")) parts.push_back(field.extract(*it));
  parts.push_back(kinetic_energy(wind));
  parts.push_back(divergence(wind, method));
  parts.push_back(vorticity(wind, method));
  return stack_channels(parts);
}

const VariableSpectra& DiagnosticsReport::find(const std::string& name) const {
  for (const auto& v : variables) {
    if (v.name == name) return v;
  }
  fail(ErrorCode::ChannelOutOfRange, "diagnostics report has no variable '" + name + "'");
}

DiagnosticsReport diagnostics_report(std::span<const GridField> truth,
                                     std::span<const GridField> pred,
                                     const DiagnosticsOptions& options) {
  if (truth.empty()) fail(ErrorCode::EmptyDataset, "diagnostics need at least one sample");
  if (truth.size() != pred.size()) {
    fail(ErrorCode::ShapeMismatch, "truth and prediction sample counts differ");
  }
  std::vector<std::string> names;
  std::vector<std::vector<RadialSpectrum>> truth_spectra, pred_spectra;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    require_same_grid(truth[s], pred[s], "diagnostics_report");
    require_same_grid(truth.front(), truth[s], "diagnostics_report");
    const GridField tv = diagnostic_variables(truth[s], options.method);
    const GridField pv = diagnostic_variables(pred[s], options.method);
    if (tv.channel_names() != pv.channel_names()) {
      fail(ErrorCode::ChannelMismatch, "truth and prediction carry different variables");
    }
    if (s == 0) {
      names = tv.channel_names();
      truth_spectra.resize(names.size());
      pred_spectra.resize(names.size());
    } else if (tv.channel_names() != names) {
      fail(ErrorCode::ChannelMismatch, "samples carry different variables");
    }
    const std::size_t bins =
        options.n_bins ? options.n_bins : default_bin_count(tv.height(), tv.width());
    for (std::size_t c = 0; c < names.size(); ++c) {
      truth_spectra[c].push_back(radial_bin(psd(tv, c), bins, options.scale));
      pred_spectra[c].push_back(radial_bin(psd(pv, c), bins, options.scale));
    }
  }
  DiagnosticsReport report;
  for (std::size_t c = 0; c < names.size(); ++c) {
    VariableSpectra vs{names[c], mean_radial(truth_spectra[c]), mean_radial(pred_spectra[c]), {}};
    const double eps = log_floor(names[c], options.epsilon, truth.front().dx());
    vs.log_gap.resize(vs.truth.size());
    for (std::size_t b = 0; b < vs.truth.size(); ++b) {
      vs.log_gap[b] = std::log(vs.pred.bin_power[b] + eps) - std::log(vs.truth.bin_power[b] + eps);
    }
    report.variables.push_back(std::move(vs));
  }
  return report;
}

double log_floor(const std::string& variable, double epsilon, double dx) {
  if (variable == "div" || variable == "vort") return epsilon / (dx * dx);
  return epsilon;
}

DiagnosticsReport diagnostics_report(const GridField& truth, const GridField& pred,
                                     const DiagnosticsOptions& options) {
  return diagnostics_report(std::span<const GridField>(&truth, 1),
                            std::span<const GridField>(&pred, 1), options);
}

}  // namespace spectra
