#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spectra/error.hpp"
#include "spectra/spectral.hpp"
#include "test_support.hpp"

using namespace spectra;
using std::numbers::pi;

namespace {

// Direct O(N^2) DFT used as an oracle for the fast transforms.
std::vector<cplx> naive_dft2(const std::vector<double>& q, std::size_t h, std::size_t w) {
  std::vector<cplx> out(h * w);
  for (std::size_t kh = 0; kh < h; ++kh) {
    for (std::size_t kw = 0; kw < w; ++kw) {
      cplx sum{};
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          const double angle = -2.0 * pi *
                               (static_cast<double>(kh * i) / static_cast<double>(h) +
                                static_cast<double>(kw * j) / static_cast<double>(w));
          sum += q[i * w + j] * cplx(std::cos(angle), std::sin(angle));
        }
      }
      out[kh * w + kw] = sum;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("fast transform matches the direct DFT for radix-2 and Bluestein sizes") {
  for (auto [h, w] : {std::pair{4u, 8u}, std::pair{6u, 5u}, std::pair{12u, 7u}, std::pair{3u, 16u}}) {
    const auto q = test::random_values(h * w, h * 100 + w);
    const auto fast = dft2(q, h, w, 1.0);
    const auto slow = naive_dft2(q, h, w);
    double scale = 0.0, err = 0.0;
    for (std::size_t m = 0; m < slow.size(); ++m) {
      scale = std::max(scale, std::abs(slow[m]));
      err = std::max(err, std::abs(slow[m] - fast.coeffs[m]));
    }
    CHECK(err / scale < 1e-12);
  }
}

TEST_CASE("dft2 examples") {
  SUBCASE("constant field is DC-only") {
    const auto f = make_field(std::vector<double>(6 * 4, 2.5), 6, 4, 1.0, {"q"});
    const auto s = dft2(f, 0);
    CHECK(s.at(0, 0).real() == doctest::Approx(2.5 * 24));
    for (std::size_t m = 1; m < s.coeffs.size(); ++m) CHECK(std::abs(s.coeffs[m]) < 1e-12);
  }
  SUBCASE("cosine along x has power only at kw = +-1") {
    const std::size_t h = 4, w = 8;
    const auto f = test::analytic_field(h, w, 1.0, [&](double x, double) {
      return std::cos(2.0 * pi * x / static_cast<double>(w));
    });
    const auto s = dft2(f, 0);
    for (std::size_t kh = 0; kh < h; ++kh) {
      for (std::size_t kw = 0; kw < w; ++kw) {
        const double mag = std::abs(s.at(kh, kw));
        if (kh == 0 && (kw == 1 || kw == w - 1)) {
          CHECK(mag == doctest::Approx(h * w / 2.0));
        } else {
          CHECK(mag < 1e-12);
        }
      }
    }
  }
  SUBCASE("real input gives Hermitian coefficients") {
    for (std::size_t n : {4u, 5u, 8u}) {
      const auto f = test::random_field(n, n + 2, n);
      const auto s = dft2(f, 0);
      const std::size_t h = s.height, w = s.width;
      double scale = 0.0;
      for (auto c : s.coeffs) scale = std::max(scale, std::abs(c));
      for (std::size_t kh = 0; kh < h; ++kh) {
        for (std::size_t kw = 0; kw < w; ++kw) {
          const cplx mirror = std::conj(s.at((h - kh) % h, (w - kw) % w));
          CHECK(std::abs(s.at(kh, kw) - mirror) <= 1e-12 * scale);
        }
      }
    }
  }
  SUBCASE("channel out of range") {
    const auto f = test::random_field(4, 4, 1);
    CHECK_THROWS_AS(dft2(f, 1), Error);
  }
}

TEST_CASE("round trip and Parseval on random fields") {
  for (std::size_t n : {4u, 8u, 16u, 32u, 6u, 10u}) {
    const auto f = test::random_field(n, n, 7 * n, 0.5);
    const auto s = dft2(f, 0);
    const auto back = inverse_dft2_real(s);
    CHECK(test::max_abs_diff(back, f.channel(0)) / test::max_abs(std::vector<double>(
                                                         f.channel(0).begin(), f.channel(0).end())) <
          1e-12);
    double spec_energy = 0.0, field_energy = 0.0;
    for (auto c : s.coeffs) spec_energy += std::norm(c);
    for (double x : f.channel(0)) field_energy += x * x;
    CHECK(std::abs(spec_energy - n * n * field_energy) <= 1e-10 * spec_energy);
  }
}

TEST_CASE("psd follows the normalized squared-magnitude definition") {
  SUBCASE("zero field") {
    const auto p = psd(make_field(std::vector<double>(16, 0.0), 4, 4, 1.0, {"q"}), 0);
    for (double x : p.power) CHECK(x == 0.0);
  }
  SUBCASE("constant on 2x2") {
    const double c = 1.5;
    const auto p = psd(make_field({c, c, c, c}, 2, 2, 1.0, {"q"}), 0);
    CHECK(p.at(0, 0) == doctest::Approx(4 * c * c));
    CHECK(p.at(0, 1) == doctest::Approx(0.0));
    CHECK(p.at(1, 0) == doctest::Approx(0.0));
    CHECK(p.at(1, 1) == doctest::Approx(0.0));
  }
  SUBCASE("Parseval in PSD units: sum(P) * dx = sum(q^2)") {
    const double dx = 3.0;
    const auto f = test::random_field(8, 12, 5, dx);
    const auto p = psd(f, 0);
    double total = 0.0, energy = 0.0;
    for (double x : p.power) total += x;
    for (double x : f.channel(0)) energy += x * x;
    CHECK(total * dx == doctest::Approx(energy).epsilon(1e-12));
  }
}

TEST_CASE("wavenumber grid uses signed frequencies") {
  const auto g = wavenumber_grid(4, 4, 1.0);
  CHECK(g.kappa_x[0 * 4 + 1] == doctest::Approx(pi / 2));
  CHECK(g.kappa_x[0 * 4 + 3] == doctest::Approx(-pi / 2));
  CHECK(g.kappa_y[1 * 4 + 0] == doctest::Approx(pi / 2));
  CHECK(g.kappa[0] == 0.0);
  double kmax = 0.0;
  for (std::size_t m = 0; m < g.k_index.size(); ++m) {
    kmax = std::max(kmax, g.k_index[m]);
    if (m != 0) CHECK(g.kappa[m] > 0.0);
  }
  CHECK(kmax == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(max_k_index(4, 4) == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(signed_frequency(2, 4) == -2);
  CHECK(signed_frequency(2, 5) == 2);
  CHECK(signed_frequency(3, 5) == -2);
  CHECK_THROWS_AS(wavenumber_grid(4, 4, 0.0), Error);
}

TEST_CASE("spectral derivative") {
  SUBCASE("constant field has zero derivative") {
    const auto f = make_field(std::vector<double>(64, 4.0), 8, 8, 2.0, {"q"});
    const auto d = spectral_derivative(f, 0, Axis::X);
    for (double x : d.values()) CHECK(std::abs(x) < 1e-12);
  }
  SUBCASE("resolved sine differentiates exactly") {
    const std::size_t h = 16, w = 32;
    const double dx = 250.0, len = static_cast<double>(w) * dx, c = 2.0 * pi / len;
    const auto f = test::analytic_field(h, w, dx, [&](double x, double) { return std::sin(c * x); });
    const auto d = spectral_derivative(f, 0, Axis::X);
    double err = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        err = std::max(err, std::abs(d.at(0, i, j) - c * std::cos(c * static_cast<double>(j) * dx)));
      }
    }
    CHECK(err < 1e-10 * c);  // relative to the derivative amplitude
    CHECK(err < 1e-10);
    const auto dy = spectral_derivative(f, 0, Axis::Y);
    for (double x : dy.values()) CHECK(std::abs(x) < 1e-12);
  }
  SUBCASE("imaginary residue of the inverse transform is negligible") {
    const auto f = test::random_field(8, 8, 3);
    Spectrum s = dft2(f, 0);
    const auto kx = derivative_wavenumbers(8, 8, 1.0, Axis::X);
    for (std::size_t m = 0; m < s.coeffs.size(); ++m) s.coeffs[m] *= cplx(0.0, kx[m]);
    const auto z = inverse_dft2(s);
    double re = 0.0, im = 0.0;
    for (auto c : z) {
      re = std::max(re, std::abs(c.real()));
      im = std::max(im, std::abs(c.imag()));
    }
    CHECK(im < 1e-10 * re);
  }
  SUBCASE("linearity") {
    const auto f = test::random_field(16, 8, 21, 2.0);
    const auto g = test::random_field(16, 8, 22, 2.0);
    const double a = 0.37, b = -1.9;
    std::vector<double> comb(f.values().size());
    for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = a * f.values()[i] + b * g.values()[i];
    const auto h = make_field(comb, 16, 8, 2.0, {"q"});
    for (Axis axis : {Axis::X, Axis::Y}) {
      const auto dh = spectral_derivative(h, 0, axis);
      const auto df = spectral_derivative(f, 0, axis);
      const auto dg = spectral_derivative(g, 0, axis);
      for (std::size_t i = 0; i < comb.size(); ++i) {
        CHECK(std::abs(dh.values()[i] - (a * df.values()[i] + b * dg.values()[i])) < 1e-12);
      }
    }
  }
}

TEST_CASE("derivative spectra scale by kappa squared away from Nyquist") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t h = 16, w = 12;
    const double dx = 1000.0;
    const auto f = test::random_field(h, w, 900 + seed, dx);
    const auto p = psd(f, 0);
    const auto px = psd(spectral_derivative(f, 0, Axis::X), 0);
    const auto py = psd(spectral_derivative(f, 0, Axis::Y), 0);
    const auto g = wavenumber_grid(h, w, dx);
    // Modes with kappa_x = 0 are exactly zero; roundoff there is set by the spectrum peak.
    double peak_x = 0.0, peak = 0.0;
    for (std::size_t m = 0; m < h * w; ++m) {
      peak_x = std::max(peak_x, px.power[m]);
      peak = std::max(peak, px.power[m] + py.power[m]);
    }
    for (std::size_t kh = 0; kh < h; ++kh) {
      for (std::size_t kw = 0; kw < w; ++kw) {
        const std::size_t m = kh * w + kw;
        if (2 * kw == w || 2 * kh == h) continue;
        CHECK(std::abs(px.power[m] - g.kappa_x[m] * g.kappa_x[m] * p.power[m]) <= 1e-10 * peak_x);
        const double grad = px.power[m] + py.power[m];
        CHECK(std::abs(grad - g.kappa[m] * g.kappa[m] * p.power[m]) <= 1e-10 * peak);
      }
    }
  }
}

TEST_CASE("radial binning") {
  SUBCASE("counts partition the non-DC modes") {
    for (auto scale : {BinScale::Linear, BinScale::Log}) {
      for (std::size_t n : {4u, 8u, 16u, 10u}) {
        const auto r = radial_bin(psd(test::random_field(n, n + 4, n), 0), 7, scale);
        std::size_t total = 0;
        for (auto c : r.bin_counts) total += c;
        CHECK(total == n * (n + 4) - 1);
      }
    }
  }
  SUBCASE("too few bins") {
    CHECK_THROWS_AS(radial_bin(psd(test::random_field(4, 4, 1), 0), 1), Error);
  }
  SUBCASE("a single mode puts all power in the bin containing its k") {
    const std::size_t n = 32;
    const auto f = test::analytic_field(n, n, 1.0, [&](double x, double y) {
      return std::cos(2.0 * pi * (3.0 * x + 4.0 * y) / static_cast<double>(n));
    });
    const auto r = radial_bin(psd(f, 0), 16, BinScale::Log);
    std::size_t hot = r.size();
    for (std::size_t b = 0; b < r.size(); ++b) {
      if (r.bin_power[b] > 1e-20) {
        CHECK(hot == r.size());
        hot = b;
      }
    }
    REQUIRE(hot < r.size());
    CHECK(r.bin_edges[hot] <= 5.0);
    CHECK(r.bin_edges[hot + 1] >= 5.0);
  }
  SUBCASE("white noise is flat on average") {
    // Monte Carlo: the mean of many periodograms of unit white noise is
    // 1/dx at every mode, so every populated bin converges to the same level.
    const std::size_t n = 64, seeds = 40;
    std::vector<RadialSpectrum> all;
    for (std::size_t s = 0; s < seeds; ++s) {
      all.push_back(radial_bin(psd(test::random_field(n, n, 5000 + s), 0), 8, BinScale::Linear));
    }
    const auto mean = mean_radial(all);
    const double expected = 1.0 / 3.0;  // variance of U(-1, 1), dx = 1
    for (std::size_t b = 0; b < mean.size(); ++b) {
      REQUIRE(mean.bin_counts[b] > 0);
      const double tol = 4.0 / std::sqrt(static_cast<double>(mean.bin_counts[b] * seeds));
      CHECK(std::abs(mean.bin_power[b] / expected - 1.0) < tol);
    }
  }
}
