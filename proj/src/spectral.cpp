#include "spectra/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spectra/error.hpp"
#include "spectra/fft.hpp"

namespace spectra {

long signed_frequency(std::size_t index, std::size_t n) {
  const auto i = static_cast<long>(index);
  const auto len = static_cast<long>(n);
  return 2 * i < len ? i : i - len;
}

double max_k_index(std::size_t height, std::size_t width) {
  double best = 0.0;
  for (std::size_t kh = 0; kh < height; ++kh) {
    const double sh = static_cast<double>(signed_frequency(kh, height));
    for (std::size_t kw = 0; kw < width; ++kw) {
      const double sw = static_cast<double>(signed_frequency(kw, width));
      best = std::max(best, sh * sh + sw * sw);
    }
  }
  return std::sqrt(best);
}

Spectrum dft2(std::span<const double> plane, std::size_t height, std::size_t width, double dx) {
  if (plane.size() != height * width) {
    fail(ErrorCode::DimensionMismatch, "dft2: plane size does not match grid");
  }
  Spectrum s{height, width, dx, std::vector<cplx>(plane.begin(), plane.end())};
  fft::transform2d(s.coeffs, height, width, fft::Direction::Forward);
  return s;
}

Spectrum dft2(const GridField& field, std::size_t channel) {
  return dft2(field.channel(channel), field.height(), field.width(), field.dx());
}

std::vector<cplx> inverse_dft2(const Spectrum& spectrum) {
  std::vector<cplx> out = spectrum.coeffs;
  fft::transform2d(out, spectrum.height, spectrum.width, fft::Direction::Backward);
  const double scale = 1.0 / static_cast<double>(spectrum.height * spectrum.width);
  for (auto& z : out) z *= scale;
  return out;
}

std::vector<double> inverse_dft2_real(const Spectrum& spectrum) {
  const auto z = inverse_dft2(spectrum);
  std::vector<double> out(z.size());
  std::transform(z.begin(), z.end(), out.begin(), [](cplx c) { return c.real(); });
  return out;
}

PSDGrid psd(const Spectrum& spectrum) {
  PSDGrid g{spectrum.height, spectrum.width, spectrum.dx, std::vector<double>(spectrum.coeffs.size())};
  const double norm = 1.0 / (static_cast<double>(spectrum.height * spectrum.width) * spectrum.dx);
  for (std::size_t m = 0; m < g.power.size(); ++m) g.power[m] = std::norm(spectrum.coeffs[m]) * norm;
  return g;
}

PSDGrid psd(const GridField& field, std::size_t channel) { return psd(dft2(field, channel)); }

WavenumberGrid wavenumber_grid(std::size_t height, std::size_t width, double dx) {
  if (height < 2 || width < 2) fail(ErrorCode::DimensionMismatch, "wavenumber grid needs H, W >= 2");
  if (!(dx > 0.0)) fail(ErrorCode::InvalidSpacing, "grid spacing must be positive");
  WavenumberGrid g;
  g.height = height;
  g.width = width;
  g.dx = dx;
  const std::size_t n = height * width;
  g.kappa_x.resize(n);
  g.kappa_y.resize(n);
  g.kappa.resize(n);
  g.k_index.resize(n);
  const double cx = 2.0 * std::numbers::pi / (static_cast<double>(width) * dx);
  const double cy = 2.0 * std::numbers::pi / (static_cast<double>(height) * dx);
  for (std::size_t kh = 0; kh < height; ++kh) {
    const double sh = static_cast<double>(signed_frequency(kh, height));
    for (std::size_t kw = 0; kw < width; ++kw) {
      const double sw = static_cast<double>(signed_frequency(kw, width));
      const std::size_t m = kh * width + kw;
      g.kappa_x[m] = cx * sw;
      g.kappa_y[m] = cy * sh;
      g.kappa[m] = std::hypot(g.kappa_x[m], g.kappa_y[m]);
      g.k_index[m] = std::sqrt(sh * sh + sw * sw);
    }
  }
  return g;
}

std::vector<double> derivative_wavenumbers(std::size_t height, std::size_t width, double dx,
                                           Axis axis) {
  const std::size_t n = axis == Axis::X ? width : height;
  const double c = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  std::vector<double> along(n);
  for (std::size_t k = 0; k < n; ++k) {
    const bool nyquist = n % 2 == 0 && 2 * k == n;
    along[k] = nyquist ? 0.0 : c * static_cast<double>(signed_frequency(k, n));
  }
  std::vector<double> out(height * width);
  for (std::size_t kh = 0; kh < height; ++kh) {
    for (std::size_t kw = 0; kw < width; ++kw) {
      out[kh * width + kw] = axis == Axis::X ? along[kw] : along[kh];
    }
  }
  return out;
}

std::vector<double> spectral_derivative(std::span<const double> plane, std::size_t height,
                                        std::size_t width, double dx, Axis axis) {
  Spectrum s = dft2(plane, height, width, dx);
  const auto kappa = derivative_wavenumbers(height, width, dx, axis);
  for (std::size_t m = 0; m < s.coeffs.size(); ++m) s.coeffs[m] *= cplx(0.0, kappa[m]);
  return inverse_dft2_real(s);
}

GridField spectral_derivative(const GridField& field, std::size_t channel, Axis axis) {
  auto d = spectral_derivative(field.channel(channel), field.height(), field.width(), field.dx(),
                               axis);
  const std::string name =
      "d" + field.channel_names()[channel] + (axis == Axis::X ? "/dx" : "/dy");
  return make_field(std::move(d), field.height(), field.width(), field.dx(), {name});
}

std::size_t default_bin_count(std::size_t height, std::size_t width) {
  return std::max<std::size_t>(2, std::min(height, width) / 2);
}

RadialSpectrum radial_bin(const PSDGrid& grid, std::size_t n_bins, BinScale scale) {
  if (n_bins < 2) fail(ErrorCode::TooFewBins, "radial binning needs at least 2 bins");
  const double k_max = max_k_index(grid.height, grid.width);
  RadialSpectrum r;
  r.bin_edges.resize(n_bins + 1);
  // Log edges start at k = 1, the smallest nonzero k_index on any grid.
  const double log_span = std::log(k_max);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n_bins);
    r.bin_edges[i] = scale == BinScale::Log ? std::exp(t * log_span) : t * k_max;
  }
  r.bin_edges.back() = k_max;

  std::vector<double> power_sum(n_bins, 0.0);
  std::vector<double> k_sum(n_bins, 0.0);
  r.bin_counts.assign(n_bins, 0);
  const double nb = static_cast<double>(n_bins);
  for (std::size_t kh = 0; kh < grid.height; ++kh) {
    const double sh = static_cast<double>(signed_frequency(kh, grid.height));
    for (std::size_t kw = 0; kw < grid.width; ++kw) {
      if (kh == 0 && kw == 0) continue;
      const double sw = static_cast<double>(signed_frequency(kw, grid.width));
      const double k = std::sqrt(sh * sh + sw * sw);
      double pos = scale == BinScale::Log ? nb * std::log(k) / log_span : nb * k / k_max;
      // Linear bins are (e_i, e_{i+1}]; log bins [e_i, e_{i+1}) with the top closed.
      long bin = scale == BinScale::Log ? static_cast<long>(std::floor(pos))
                                        : static_cast<long>(std::ceil(pos)) - 1;
      bin = std::clamp<long>(bin, 0, static_cast<long>(n_bins) - 1);
      const auto b = static_cast<std::size_t>(bin);
      power_sum[b] += grid.at(kh, kw);
      k_sum[b] += k;
      ++r.bin_counts[b];
    }
  }
  r.bin_power.resize(n_bins);
  r.bin_centers.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (r.bin_counts[b] > 0) {
      const double cnt = static_cast<double>(r.bin_counts[b]);
      r.bin_power[b] = power_sum[b] / cnt;
      r.bin_centers[b] = k_sum[b] / cnt;
    } else {
      r.bin_power[b] = 0.0;
      r.bin_centers[b] = 0.5 * (r.bin_edges[b] + r.bin_edges[b + 1]);
    }
  }
  return r;
}

RadialSpectrum mean_radial(std::span<const RadialSpectrum> spectra) {
  if (spectra.empty()) fail(ErrorCode::EmptyDataset, "no spectra to average");
  RadialSpectrum out = spectra.front();
  for (std::size_t i = 1; i < spectra.size(); ++i) {
    if (spectra[i].size() != out.size()) {
      fail(ErrorCode::ShapeMismatch, "radial spectra use different bin counts");
    }
    for (std::size_t b = 0; b < out.size(); ++b) out.bin_power[b] += spectra[i].bin_power[b];
  }
  const double inv = 1.0 / static_cast<double>(spectra.size());
  for (auto& p : out.bin_power) p *= inv;
  return out;
}

}  // namespace spectra
