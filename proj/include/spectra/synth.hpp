#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spectra/grid.hpp"
#include "spectra/physics.hpp"

namespace spectra {

/// Parameters of one synthetic "region".
///
/// `alpha` is the slope of the per-mode velocity PSD (PSD ~ k^-alpha);
/// potentials are drawn with slope alpha + 2 and temperature with alpha + 1.
struct SynthSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  double dx = 5500.0;
  double alpha = 5.0 / 3.0;
  double rot_frac = 0.7;
  std::uint64_t seed = 1;
  std::string region_tag = "central";
  double wind_std = 1.0;  // expected per-component wind standard deviation
  double t2m_std = 1.0;
  double dc_value = 0.0;  // mean of every generated field

  void validate() const;
};

/// Seedable generator with a portable standard-normal draw (Box-Muller over
/// mt19937_64, which is bit-exact across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // (0, 1)
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Independent seed for one (sample, channel) stream.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t sample, std::uint64_t channel);

/// Zero-mean periodic Gaussian field whose expected per-mode PSD is
/// proportional to k_index^-alpha, scaled to expected standard deviation
/// `stddev`, then shifted by `mean`.
GridField gaussian_random_field(std::size_t height, std::size_t width, double dx, double alpha,
                                std::uint64_t seed, double stddev = 1.0, double mean = 0.0,
                                const std::string& name = "grf");
/// Velocity-slope field for `spec` using `spec.seed`.
GridField gaussian_random_field(const SynthSpec& spec);

/// u = -dpsi/dy + dchi/dx, v = dpsi/dx + dchi/dy with spectral derivatives.
WindPair wind_from_potentials(const GridField& psi, const GridField& chi);

/// Fine-grid truth for one sample together with its construction parts.
struct SyntheticSample {
  GridField psi;
  GridField chi;
  GridField truth;  // channels u, v, t2m
  std::uint64_t seed = 0;
};

SyntheticSample make_sample(const SynthSpec& spec, std::size_t index);

/// Per-sample seed recorded in manifests.
std::uint64_t sample_seed(const SynthSpec& spec, std::size_t index);

/// Coarse inputs are block averages of the fine truth.
std::vector<FieldPair> make_dataset(const SynthSpec& spec, std::size_t n_samples,
                                    std::size_t factor);

/// Reads the flat key = value spec file used by `spectra gen`.
SynthSpec parse_synth_spec(const std::string& text);

}  // namespace spectra
