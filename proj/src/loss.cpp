#include "spectra/loss.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "spectra/error.hpp"
#include "spectra/fft.hpp"
#include "spectra/spectral.hpp"

namespace spectra {

void LossConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorCode::InvalidConfig, "epsilon must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorCode::InvalidConfig, "lambda must be non-negative");
  }
}

std::shared_ptr<const PSDWeights> psd_weights(std::size_t height, std::size_t width) {
  if (height < 2 || width < 2) fail(ErrorCode::DimensionMismatch, "PSD weights need H, W >= 2");
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const PSDWeights>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({height, width}); it != cache.end()) return it->second;
  }
  auto weights = std::make_shared<PSDWeights>();
  weights->height = height;
  weights->width = width;
  weights->w.resize(height * width);
  const double k_max = max_k_index(height, width);
  const double inv = 1.0 / (k_max * k_max);
  for (std::size_t kh = 0; kh < height; ++kh) {
    const double sh = static_cast<double>(signed_frequency(kh, height));
    for (std::size_t kw = 0; kw < width; ++kw) {
      const double sw = static_cast<double>(signed_frequency(kw, width));
      weights->w[kh * width + kw] = (sh * sh + sw * sw) * inv;
    }
  }
  std::lock_guard lock(mutex);
  return cache.emplace(std::pair{height, width}, std::move(weights)).first->second;
}

std::vector<double> log_psd(std::span<const double> plane, std::size_t height, std::size_t width,
                            double dx, double epsilon) {
  const PSDGrid g = psd(dft2(plane, height, width, dx));
  std::vector<double> out(g.power.size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = std::log(g.power[m] + epsilon);
  return out;
}

PsdLossValue psd_loss_from_log_truth(std::span<const double> log_truth,
                                     std::span<const double> pred, std::size_t height,
                                     std::size_t width, double dx, double epsilon,
                                     bool with_grad) {
  const std::size_t n = height * width;
  if (log_truth.size() != n || pred.size() != n) {
    fail(ErrorCode::GridMismatch, "psd_loss: plane sizes do not match the grid");
  }
  const auto weights = psd_weights(height, width);
  Spectrum spec = dft2(pred, height, width, dx);
  const double hw = static_cast<double>(n);
  const double norm = 1.0 / (hw * dx);

  std::vector<double> diff(n), pred_power(n);
  double weighted = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    pred_power[m] = std::norm(spec.coeffs[m]) * norm;
    diff[m] = log_truth[m] - std::log(pred_power[m] + epsilon);
    weighted += weights->w[m] * diff[m] * diff[m];
  }
  PsdLossValue out;
  out.value = std::sqrt(weighted / hw);
  if (!with_grad) return out;

  out.grad.assign(n, 0.0);
  if (out.value == 0.0) {
    out.zero_loss_subgradient = true;
    return out;
  }
  // dL/dpred = 2 Re(sum_k g_k F_k e^{+i theta}), i.e. an unnormalized
  // backward transform of g * F.
  const double scale = -1.0 / (out.value * hw * hw * dx);
  for (std::size_t m = 0; m < n; ++m) {
    const double g = scale * weights->w[m] * diff[m] / (pred_power[m] + epsilon);
    spec.coeffs[m] *= g;
  }
  fft::transform2d(spec.coeffs, height, width, fft::Direction::Backward);
  for (std::size_t i = 0; i < n; ++i) out.grad[i] = 2.0 * spec.coeffs[i].real();
  return out;
}

namespace {

void require_loss_pair(const GridField& truth, const GridField& pred, const char* context) {
  require_same_grid(truth, pred, context);
  if (truth.channels() != pred.channels()) {
    fail(ErrorCode::GridMismatch, std::string(context) + ": channel counts differ");
  }
}

}  // namespace

double psd_loss(const GridField& truth, const GridField& pred, std::size_t channel,
                const LossConfig& cfg) {
  cfg.validate();
  require_loss_pair(truth, pred, "psd_loss");
  const auto lt = log_psd(truth.channel(channel), truth.height(), truth.width(), truth.dx(),
                          cfg.epsilon);
  return psd_loss_from_log_truth(lt, pred.channel(channel), truth.height(), truth.width(),
                                 truth.dx(), cfg.epsilon, false)
      .value;
}

PsdLossGradient psd_loss_grad(const GridField& truth, const GridField& pred, std::size_t channel,
                              const LossConfig& cfg) {
  cfg.validate();
  require_loss_pair(truth, pred, "psd_loss_grad");
  const auto lt = log_psd(truth.channel(channel), truth.height(), truth.width(), truth.dx(),
                          cfg.epsilon);
  auto r = psd_loss_from_log_truth(lt, pred.channel(channel), truth.height(), truth.width(),
                                   truth.dx(), cfg.epsilon, true);
  return PsdLossGradient{make_field(std::move(r.grad), pred.height(), pred.width(), pred.dx(),
                                    {pred.channel_names()[channel]}),
                         r.zero_loss_subgradient};
}

TotalLoss total_loss(const GridField& truth, const GridField& pred, const LossConfig& cfg) {
  cfg.validate();
  require_loss_pair(truth, pred, "total_loss");
  const std::size_t n = pred.plane_size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> grad(pred.values().size(), 0.0);
  TotalLoss out{0.0, 0.0, 0.0, pred};
  for (std::size_t c = 0; c < pred.channels(); ++c) {
    auto p = pred.channel(c), t = truth.channel(c);
    double* g = grad.data() + c * n;
    double base = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = p[i] - t[i];
      if (cfg.base == BaseLoss::L2) {
        base += r * r;
        g[i] = 2.0 * r * inv_n;
      } else {
        base += std::abs(r);
        g[i] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * inv_n;
      }
    }
    out.base += base * inv_n;
    const bool with_grad = cfg.lambda > 0.0;
    const auto lt = log_psd(t, truth.height(), truth.width(), truth.dx(), cfg.epsilon);
    const auto r = psd_loss_from_log_truth(lt, p, pred.height(), pred.width(), pred.dx(),
                                           cfg.epsilon, with_grad);
    out.psd += r.value;
    if (with_grad) {
      for (std::size_t i = 0; i < n; ++i) g[i] += cfg.lambda * r.grad[i];
    }
  }
  out.total = out.base + cfg.lambda * out.psd;
  out.grad = make_field(std::move(grad), pred.height(), pred.width(), pred.dx(),
                        pred.channel_names());
  return out;
}

}  // namespace spectra
