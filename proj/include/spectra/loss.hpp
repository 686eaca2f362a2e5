#pragma once

#include <memory>
#include <span>
#include <vector>

#include "spectra/grid.hpp"

namespace spectra {

enum class BaseLoss { L1, L2 };

struct LossConfig {
  double lambda = 0.0;      // weight of the PSD term
  double epsilon = 1e-12;   // floor inside log(PSD + eps)
  BaseLoss base = BaseLoss::L2;

  /// Throws InvalidConfig unless epsilon > 0 and lambda >= 0.
  void validate() const;
};

/// w = (k / k_max)^2 over the signed-frequency k_index; 0 at DC, 1 at k_max.
struct PSDWeights {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> w;
};

/// Weights for an H x W grid, built once per shape and shared afterwards.
/// Grid spacing cancels in k / k_max, so it is not part of the key.
std::shared_ptr<const PSDWeights> psd_weights(std::size_t height, std::size_t width);

/// log(PSD + eps) of one plane.
std::vector<double> log_psd(std::span<const double> plane, std::size_t height, std::size_t width,
                            double dx, double epsilon);

struct PsdLossValue {
  double value = 0.0;
  /// dL/dpred per cell; empty unless requested.
  std::vector<double> grad;
  /// Set when L == 0 and the zero subgradient was returned.
  bool zero_loss_subgradient = false;
};

/// Weighted log-PSD loss
///   sqrt( (1/(H W)) sum_k w(k) [log(PSD_truth + eps) - log(PSD_pred + eps)]^2 )
/// from a precomputed log_psd() of the truth plane.
PsdLossValue psd_loss_from_log_truth(std::span<const double> log_truth,
                                     std::span<const double> pred, std::size_t height,
                                     std::size_t width, double dx, double epsilon,
                                     bool with_grad);

double psd_loss(const GridField& truth, const GridField& pred, std::size_t channel,
                const LossConfig& cfg);

struct PsdLossGradient {
  GridField grad;
  bool zero_loss_subgradient = false;
};

/// Exact gradient of psd_loss with respect to the prediction channel.
PsdLossGradient psd_loss_grad(const GridField& truth, const GridField& pred, std::size_t channel,
                              const LossConfig& cfg);

struct TotalLoss {
  double total = 0.0;
  double base = 0.0;  // summed over channels
  double psd = 0.0;   // summed over channels, before lambda
  GridField grad;     // d total / d pred, same layout as pred
};

/// Per channel: mean-l1 or mean-l2 base loss plus lambda * psd_loss, summed
/// over channels with equal weights.
TotalLoss total_loss(const GridField& truth, const GridField& pred, const LossConfig& cfg);

}  // namespace spectra
