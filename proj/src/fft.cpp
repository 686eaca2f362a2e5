#include "spectra/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

namespace spectra::fft {
namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Twiddles exp(-2 pi i k / n) for k < n/2 plus the bit-reversal table.
struct Radix2Plan {
  explicit Radix2Plan(std::size_t n) : size(n), twiddle(n / 2), reversed(n) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle[k] = cplx(std::cos(angle), std::sin(angle));
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      reversed[i] = r;
    }
  }

  void run(std::span<cplx> a, Direction dir) const {
    for (std::size_t i = 0; i < size; ++i) {
      if (i < reversed[i]) std::swap(a[i], a[reversed[i]]);
    }
    const bool inverse = dir == Direction::Backward;
    for (std::size_t len = 2; len <= size; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = size / len;
      for (std::size_t start = 0; start < size; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          cplx w = twiddle[k * stride];
          if (inverse) w = std::conj(w);
          const cplx t = w * a[start + k + half];
          a[start + k + half] = a[start + k] - t;
          a[start + k] += t;
        }
      }
    }
  }

  std::size_t size;
  std::vector<cplx> twiddle;
  std::vector<std::size_t> reversed;
};

// Chirp-z evaluation of an arbitrary-length DFT through a power-of-two
// circular convolution.
struct BluesteinPlan {
  explicit BluesteinPlan(std::size_t n) : size(n), inner(next_pow2(2 * n - 1)), chirp(n),
                                          kernel_fwd(inner.size), kernel_bwd(inner.size) {
    for (std::size_t k = 0; k < n; ++k) {
      // k^2 mod 2n keeps the angle argument small for large n.
      const std::size_t k2 = (k * k) % (2 * n);
      const double angle = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
      chirp[k] = cplx(std::cos(angle), -std::sin(angle));
    }
    for (int pass = 0; pass < 2; ++pass) {
      auto& kern = pass == 0 ? kernel_fwd : kernel_bwd;
      std::fill(kern.begin(), kern.end(), cplx{});
      for (std::size_t k = 0; k < n; ++k) {
        const cplx c = pass == 0 ? std::conj(chirp[k]) : chirp[k];
        kern[k] = c;
        if (k != 0) kern[inner.size - k] = c;
      }
      inner.run(kern, Direction::Forward);
    }
  }

  void run(std::span<cplx> a, Direction dir) const {
    const bool inverse = dir == Direction::Backward;
    std::vector<cplx> buf(inner.size);
    for (std::size_t k = 0; k < size; ++k) {
      buf[k] = a[k] * (inverse ? std::conj(chirp[k]) : chirp[k]);
    }
    inner.run(buf, Direction::Forward);
    const auto& kern = inverse ? kernel_bwd : kernel_fwd;
    for (std::size_t k = 0; k < inner.size; ++k) buf[k] *= kern[k];
    inner.run(buf, Direction::Backward);
    const double scale = 1.0 / static_cast<double>(inner.size);
    for (std::size_t k = 0; k < size; ++k) {
      a[k] = buf[k] * scale * (inverse ? std::conj(chirp[k]) : chirp[k]);
    }
  }

  std::size_t size;
  Radix2Plan inner;
  std::vector<cplx> chirp;
  std::vector<cplx> kernel_fwd;
  std::vector<cplx> kernel_bwd;
};

struct Plan {
  explicit Plan(std::size_t n) {
    if (is_pow2(n)) {
      radix2 = std::make_unique<Radix2Plan>(n);
    } else {
      bluestein = std::make_unique<BluesteinPlan>(n);
    }
  }
  void run(std::span<cplx> a, Direction dir) const {
    if (radix2) {
      radix2->run(a, dir);
    } else {
      bluestein->run(a, dir);
    }
  }
  std::unique_ptr<Radix2Plan> radix2;
  std::unique_ptr<BluesteinPlan> bluestein;
};

const Plan& plan_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<Plan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Plan>(n);
  return *slot;
}

}  // namespace

void transform(std::span<cplx> data, Direction dir) {
  if (data.size() <= 1) return;
  plan_for(data.size()).run(data, dir);
}

void transform2d(std::span<cplx> data, std::size_t height, std::size_t width, Direction dir) {
  const Plan& rows = plan_for(width);
  for (std::size_t r = 0; r < height; ++r) rows.run(data.subspan(r * width, width), dir);
  const Plan& cols = plan_for(height);
  std::vector<cplx> column(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) column[r] = data[r * width + c];
    cols.run(column, dir);
    for (std::size_t r = 0; r < height; ++r) data[r * width + c] = column[r];
  }
}

}  // namespace spectra::fft
