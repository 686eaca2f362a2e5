#include "spectra/synth.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spectra/error.hpp"
#include "spectra/spectral.hpp"

namespace spectra {

void SynthSpec::validate() const {
  if (height < 2 || width < 2) fail(ErrorCode::InvalidConfig, "synthetic grid must be at least 2x2");
  if (!(dx > 0.0)) fail(ErrorCode::InvalidSpacing, "dx must be positive");
  if (!(alpha > 0.0)) fail(ErrorCode::InvalidConfig, "alpha must be positive");
  if (!(rot_frac >= 0.0 && rot_frac <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "rot_frac must lie in [0, 1]");
  }
  if (!(wind_std >= 0.0) || !(t2m_std >= 0.0)) {
    fail(ErrorCode::InvalidConfig, "standard deviations must be non-negative");
  }
}

double Rng::uniform() {
  // 53 random bits mapped to the open interval (0, 1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

enum Stream : std::uint64_t { kPsi = 0, kChi = 1, kT2m = 2 };

// White noise filtered by k^-slope/2 in spectral space; DC removed. The
// result is unnormalized: expected variance is sum(filter^2) / (H W).
std::vector<double> filtered_noise(std::size_t height, std::size_t width, double dx,
                                   double slope, std::uint64_t seed, double* expected_var) {
  Rng rng(seed);
  std::vector<double> noise(height * width);
  for (auto& x : noise) x = rng.normal();
  Spectrum s = dft2(noise, height, width, dx);
  const auto kgrid = wavenumber_grid(height, width, dx);
  double sum_sq = 0.0;
  for (std::size_t m = 0; m < s.coeffs.size(); ++m) {
    const double k = kgrid.k_index[m];
    const double amp = k > 0.0 ? std::pow(k, -0.5 * slope) : 0.0;
    s.coeffs[m] *= amp;
    sum_sq += amp * amp;
  }
  if (expected_var) *expected_var = sum_sq / static_cast<double>(height * width);
  return inverse_dft2_real(s);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t sample, std::uint64_t channel) {
  return splitmix64(splitmix64(splitmix64(base) ^ sample) ^ (channel + 0x51ED2701ull));
}

GridField gaussian_random_field(std::size_t height, std::size_t width, double dx, double alpha,
                                std::uint64_t seed, double stddev, double mean,
                                const std::string& name) {
  if (!(alpha > 0.0)) fail(ErrorCode::InvalidConfig, "alpha must be positive");
  double var = 0.0;
  auto values = filtered_noise(height, width, dx, alpha, seed, &var);
  const double scale = var > 0.0 ? stddev / std::sqrt(var) : 0.0;
  for (auto& x : values) x = x * scale + mean;
  return make_field(std::move(values), height, width, dx, {name});
}

GridField gaussian_random_field(const SynthSpec& spec) {
  spec.validate();
  return gaussian_random_field(spec.height, spec.width, spec.dx, spec.alpha, spec.seed, 1.0,
                               spec.dc_value);
}

WindPair wind_from_potentials(const GridField& psi, const GridField& chi) {
  require_same_grid(psi, chi, "wind_from_potentials");
  const auto h = psi.height(), w = psi.width();
  const double dx = psi.dx();
  auto u = spectral_derivative(chi.channel(0), h, w, dx, Axis::X);
  auto v = spectral_derivative(chi.channel(0), h, w, dx, Axis::Y);
  const auto psi_x = spectral_derivative(psi.channel(0), h, w, dx, Axis::X);
  const auto psi_y = spectral_derivative(psi.channel(0), h, w, dx, Axis::Y);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] -= psi_y[i];
    v[i] += psi_x[i];
  }
  return WindPair(make_field(std::move(u), h, w, dx, {"u"}), make_field(std::move(v), h, w, dx, {"v"}));
}

std::uint64_t sample_seed(const SynthSpec& spec, std::size_t index) {
  return stream_seed(spec.seed, index, 0xFFFF);
}

SyntheticSample make_sample(const SynthSpec& spec, std::size_t index) {
  spec.validate();
  const auto h = spec.height, w = spec.width;
  const double dx = spec.dx;
  const std::uint64_t seed = sample_seed(spec, index);

  // Potentials share the slope alpha + 2 so that velocities follow alpha.
  // Scale so that E[(u^2 + v^2) / 2] = wind_std^2.
  const double pot_slope = spec.alpha + 2.0;
  const auto kx = derivative_wavenumbers(h, w, dx, Axis::X);
  const auto ky = derivative_wavenumbers(h, w, dx, Axis::Y);
  const auto kgrid = wavenumber_grid(h, w, dx);
  double grad_power = 0.0;
  for (std::size_t m = 0; m < kx.size(); ++m) {
    const double k = kgrid.k_index[m];
    if (k > 0.0) grad_power += (kx[m] * kx[m] + ky[m] * ky[m]) * std::pow(k, -pot_slope);
  }
  grad_power /= static_cast<double>(h * w);  // expected var(u) + var(v) before scaling
  const double scale = grad_power > 0.0 ? spec.wind_std * std::sqrt(2.0 / grad_power) : 0.0;

  auto psi = filtered_noise(h, w, dx, pot_slope, stream_seed(seed, index, kPsi), nullptr);
  auto chi = filtered_noise(h, w, dx, pot_slope, stream_seed(seed, index, kChi), nullptr);
  const double a_rot = std::sqrt(spec.rot_frac) * scale;
  const double a_div = std::sqrt(1.0 - spec.rot_frac) * scale;
  for (auto& x : psi) x *= a_rot;
  for (auto& x : chi) x *= a_div;
  GridField psi_f = make_field(std::move(psi), h, w, dx, {"psi"});
  GridField chi_f = make_field(std::move(chi), h, w, dx, {"chi"});

  const WindPair wind = wind_from_potentials(psi_f, chi_f);
  GridField t2m = gaussian_random_field(h, w, dx, spec.alpha + 1.0, stream_seed(seed, index, kT2m),
                                        spec.t2m_std, spec.dc_value, "t2m");
  std::vector<double> values;
  values.reserve(3 * h * w);
  for (double x : wind.u().values()) values.push_back(x + spec.dc_value);
  for (double x : wind.v().values()) values.push_back(x + spec.dc_value);
  values.insert(values.end(), t2m.values().begin(), t2m.values().end());
  GridField truth = make_field(std::move(values), h, w, dx, {"u", "v", "t2m"});
  return SyntheticSample{std::move(psi_f), std::move(chi_f), std::move(truth), seed};
}

std::vector<FieldPair> make_dataset(const SynthSpec& spec, std::size_t n_samples,
                                    std::size_t factor) {
  spec.validate();
  if (factor == 0 || spec.height % factor != 0 || spec.width % factor != 0) {
    fail(ErrorCode::NotDivisible, "grid is not divisible by the downscaling factor");
  }
  std::vector<FieldPair> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    SyntheticSample s = make_sample(spec, i);
    GridField coarse = block_average_downsample(s.truth, factor);
    out.push_back(make_field_pair(std::move(coarse), std::move(s.truth)));
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(ErrorCode::InvalidConfig, "spec key '" + key + "': expected a number, got '" + value + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(ErrorCode::InvalidConfig,
         "spec key '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

}  // namespace

SynthSpec parse_synth_spec(const std::string& text) {
  SynthSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') continue;  // table headers are accepted and ignored
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidConfig, "spec line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "region_tag") {
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      spec.region_tag = value;
    } else if (key == "height") {
      spec.height = parse_uint(key, value);
    } else if (key == "width") {
      spec.width = parse_uint(key, value);
    } else if (key == "dx") {
      spec.dx = parse_double(key, value);
    } else if (key == "alpha") {
      spec.alpha = parse_double(key, value);
    } else if (key == "rot_frac") {
      spec.rot_frac = parse_double(key, value);
    } else if (key == "seed") {
      spec.seed = parse_uint(key, value);
    } else if (key == "wind_std") {
      spec.wind_std = parse_double(key, value);
    } else if (key == "t2m_std") {
      spec.t2m_std = parse_double(key, value);
    } else if (key == "dc_value") {
      spec.dc_value = parse_double(key, value);
    } else {
      fail(ErrorCode::InvalidConfig, "spec line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

}  // namespace spectra
