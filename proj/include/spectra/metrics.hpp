#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "spectra/grid.hpp"
#include "spectra/physics.hpp"
#include "spectra/spectral.hpp"

namespace spectra {

/// Ensemble of predictions for a single target; all members share one grid
/// and channel layout.
class Ensemble {
 public:
  explicit Ensemble(std::vector<GridField> members);

  std::size_t size() const noexcept { return members_.size(); }
  const GridField& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<GridField>& members() const noexcept { return members_; }
  /// Member-wise arithmetic mean.
  GridField mean() const;

 private:
  std::vector<GridField> members_;
};

enum class CrpsEstimator { Standard, Fair };

/// Per-channel mean absolute error.
std::vector<double> mae(const GridField& pred, const GridField& truth);
/// Per-channel mean squared error.
std::vector<double> mse(const GridField& pred, const GridField& truth);
std::vector<double> rmse(const GridField& pred, const GridField& truth);

/// Kernel-form CRPS of one scalar ensemble against an observation:
/// mean|x_i - y| - sum_ij |x_i - x_j| / (2 M^2) for the standard estimator,
/// with 2 M (M - 1) in the second denominator for the fair one.
double crps_scalar(std::span<const double> members, double observation, CrpsEstimator estimator);

/// Per-channel CRPS, averaged uniformly over cells.
std::vector<double> crps(const Ensemble& ensemble, const GridField& truth,
                         CrpsEstimator estimator);

struct GapOptions {
  std::size_t n_bins = 0;  // 0 selects default_bin_count()
  BinScale scale = BinScale::Log;
  double epsilon = 1e-12;
};

using BandGaps = std::array<double, 4>;

/// Mean |log(a + eps) - log(b + eps)| over non-empty bins of each quarter of
/// the bin range, lowest wavenumbers first. A band without populated bins
/// reports 0.
BandGaps band_gaps(const RadialSpectrum& a, const RadialSpectrum& b, double epsilon);

/// Per-channel quartile-band log-PSD gaps between prediction and truth.
std::vector<BandGaps> spectral_gap(const GridField& pred, const GridField& truth,
                                   const GapOptions& options = {});

struct VariableMetrics {
  std::string name;
  double mae = 0.0;
  double rmse = 0.0;
  double crps = 0.0;
  BandGaps gaps{};
};

struct MetricsReport {
  std::vector<VariableMetrics> variables;
  std::size_t samples = 0;
  const VariableMetrics& find(const std::string& name) const;
};

struct MetricsOptions {
  CrpsEstimator estimator = CrpsEstimator::Fair;
  GapOptions gap;
  DerivativeMethod method = DerivativeMethod::Spectral;
  /// Add Eh/div/vort rows when the fields carry u and v.
  bool derived = true;
};

/// Pools cells and samples uniformly. MAE/RMSE use the ensemble mean, CRPS
/// the members, and gaps compare the dataset-mean radial spectrum of the
/// ensemble members with that of the truth.
MetricsReport metrics_report(std::span<const GridField> truth, std::span<const Ensemble> preds,
                             const MetricsOptions& options = {});

}  // namespace spectra
