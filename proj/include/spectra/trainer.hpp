#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spectra/error.hpp"
#include "spectra/grid.hpp"
#include "spectra/loss.hpp"
#include "spectra/metrics.hpp"
#include "spectra/physics.hpp"

namespace spectra {

/// Linear coarse-to-fine map: nearest-neighbour upsampling followed by a
/// periodic K x K correlation from every input channel to every output
/// channel, plus a per-output bias.
///
/// out[o](i, j) = b[o] + sum_{c,a,b} w[o][c][a][b] * up[c](i + a - r, j + b - r)
///
/// with r = K / 2 and indices wrapping. Parameters are stored flat as all
/// kernels in (o, c, a, b) order followed by the biases.
class ToyDownscaler {
 public:
  ToyDownscaler(std::size_t factor, std::size_t kernel_size, std::size_t in_channels,
                std::size_t out_channels);

  std::size_t factor() const noexcept { return factor_; }
  std::size_t kernel_size() const noexcept { return kernel_size_; }
  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t out_channels() const noexcept { return out_channels_; }

  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  std::size_t kernel_offset(std::size_t o, std::size_t c) const {
    return (o * in_channels_ + c) * kernel_size_ * kernel_size_;
  }
  double& weight(std::size_t o, std::size_t c, std::size_t a, std::size_t b) {
    return params_[kernel_offset(o, c) + a * kernel_size_ + b];
  }
  double& bias(std::size_t o) { return params_[bias_offset() + o]; }
  std::size_t bias_offset() const noexcept {
    return out_channels_ * in_channels_ * kernel_size_ * kernel_size_;
  }

 private:
  std::size_t factor_;
  std::size_t kernel_size_;
  std::size_t in_channels_;
  std::size_t out_channels_;
  std::vector<double> params_;
};

/// Identity kernels (centre tap 1 on matching channels) plus N(0, noise_std)
/// perturbations from `seed`; zero biases.
ToyDownscaler init_model(std::size_t factor, std::size_t kernel_size, std::uint64_t seed,
                         std::size_t in_channels = 3, std::size_t out_channels = 3,
                         double noise_std = 1e-2);

/// Nearest-neighbour upsampling of every channel; dx shrinks by `factor`.
GridField upsample_nearest(const GridField& input, std::size_t factor);

/// Output channels take the names of the first out_channels input channels.
GridField forward(const ToyDownscaler& model, const GridField& input);

/// Gradient of a scalar loss with respect to the flat parameter vector,
/// given dLoss/dOutput.
std::vector<double> backward(const ToyDownscaler& model, const GridField& input,
                             const GridField& grad_wrt_output);

struct TrainConfig {
  LossConfig loss;
  std::size_t epochs = 200;
  double lr = 1e-2;
  double momentum = 0.0;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 7;
  std::size_t kernel_size = 5;
  double init_noise = 1e-2;
  GapOptions gap;
};

struct EpochRecord {
  double total = 0.0;
  double base = 0.0;
  double psd = 0.0;
  double val_mae = 0.0;  // mean over output channels
  double val_gap = 0.0;  // top-quartile log-PSD gap, mean over output channels
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Sample visiting order of every epoch.
  std::vector<std::vector<std::size_t>> batch_orders;
};

struct TrainResult {
  ToyDownscaler model;
  TrainHistory history;
};

/// Raised when the training loss stops being finite; carries the history
/// recorded so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, TrainHistory history)
      : Error(ErrorCode::DivergenceDetected, what), history_(std::move(history)) {}
  const TrainHistory& history() const noexcept { return history_; }

 private:
  TrainHistory history_;
};

/// Gradient descent (optionally heavy-ball momentum) on the mean per-sample
/// total_loss. Validation statistics use `validation`, or the training set
/// when it is empty.
TrainResult train(std::span<const FieldPair> dataset, std::span<const FieldPair> validation,
                  const TrainConfig& cfg);

/// Mean per-sample total loss of `model` over a dataset, with the parameter
/// gradient. Exposed for gradient checks.
double dataset_loss(const ToyDownscaler& model, std::span<const FieldPair> dataset,
                    const LossConfig& cfg, std::vector<double>* grad);

struct EvalOptions {
  DerivativeMethod method = DerivativeMethod::Spectral;
  GapOptions gap;
};

struct Evaluation {
  MetricsReport metrics;
  DiagnosticsReport diagnostics;
};

Evaluation evaluate(const ToyDownscaler& model, std::span<const FieldPair> dataset,
                    const EvalOptions& options = {});

/// Model file: "TDS1", u32 factor, u32 kernel size, u32 in channels,
/// u32 out channels, then the f64 parameters, all little-endian.
std::string encode_model(const ToyDownscaler& model);
ToyDownscaler decode_model(const std::string& bytes, const std::string& source = "<memory>");

}  // namespace spectra
