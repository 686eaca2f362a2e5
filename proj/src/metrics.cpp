#include "spectra/metrics.hpp"

#include <cmath>

#include "spectra/error.hpp"

namespace spectra {

Ensemble::Ensemble(std::vector<GridField> members) : members_(std::move(members)) {
  if (members_.empty()) fail(ErrorCode::EmptyEnsemble, "ensemble needs at least one member");
  for (const auto& m : members_) {
    require_same_grid(members_.front(), m, "Ensemble");
    if (m.channel_names() != members_.front().channel_names()) {
      fail(ErrorCode::ChannelMismatch, "ensemble members carry different channels");
    }
  }
}

GridField Ensemble::mean() const {
  const auto& first = members_.front();
  std::vector<double> acc(first.values().size(), 0.0);
  for (const auto& m : members_) {
    auto v = m.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(members_.size());
  for (auto& x : acc) x *= inv;
  return make_field(std::move(acc), first.height(), first.width(), first.dx(),
                    first.channel_names());
}

namespace {

void require_matching(const GridField& pred, const GridField& truth, const char* context) {
  require_same_grid(pred, truth, context);
  if (pred.channels() != truth.channels()) {
    fail(ErrorCode::GridMismatch, std::string(context) + ": channel counts differ");
  }
}

}  // namespace

std::vector<double> mae(const GridField& pred, const GridField& truth) {
  require_matching(pred, truth, "mae");
  std::vector<double> out;
  for (std::size_t c = 0; c < truth.channels(); ++c) {
    auto p = pred.channel(c), t = truth.channel(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - t[i]);
    out.push_back(sum / static_cast<double>(p.size()));
  }
  return out;
}

std::vector<double> mse(const GridField& pred, const GridField& truth) {
  require_matching(pred, truth, "mse");
  std::vector<double> out;
  for (std::size_t c = 0; c < truth.channels(); ++c) {
    auto p = pred.channel(c), t = truth.channel(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] - t[i]) * (p[i] - t[i]);
    out.push_back(sum / static_cast<double>(p.size()));
  }
  return out;
}

std::vector<double> rmse(const GridField& pred, const GridField& truth) {
  auto out = mse(pred, truth);
  for (auto& x : out) x = std::sqrt(x);
  return out;
}

double crps_scalar(std::span<const double> members, double observation, CrpsEstimator estimator) {
  const std::size_t m = members.size();
  if (m == 0) fail(ErrorCode::EmptyEnsemble, "CRPS needs at least one member");
  if (estimator == CrpsEstimator::Fair && m < 2) {
    fail(ErrorCode::FairEstimatorNeedsTwoMembers, "fair CRPS needs at least two members");
  }
  double skill = 0.0;
  for (double x : members) skill += std::abs(x - observation);
  skill /= static_cast<double>(m);
  double spread = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) spread += std::abs(members[i] - members[j]);
  }
  spread *= 2.0;  // ordered pairs
  const double md = static_cast<double>(m);
  const double denom = estimator == CrpsEstimator::Fair ? 2.0 * md * (md - 1.0) : 2.0 * md * md;
  return skill - spread / denom;
}

std::vector<double> crps(const Ensemble& ensemble, const GridField& truth,
                         CrpsEstimator estimator) {
  require_matching(ensemble[0], truth, "crps");
  if (estimator == CrpsEstimator::Fair && ensemble.size() < 2) {
    fail(ErrorCode::FairEstimatorNeedsTwoMembers, "fair CRPS needs at least two members");
  }
  std::vector<double> out;
  std::vector<double> cell(ensemble.size());
  for (std::size_t c = 0; c < truth.channels(); ++c) {
    auto t = truth.channel(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t k = 0; k < ensemble.size(); ++k) cell[k] = ensemble[k].channel(c)[i];
      sum += crps_scalar(cell, t[i], estimator);
    }
    out.push_back(sum / static_cast<double>(t.size()));
  }
  return out;
}

BandGaps band_gaps(const RadialSpectrum& a, const RadialSpectrum& b, double epsilon) {
  if (a.size() != b.size()) fail(ErrorCode::ShapeMismatch, "radial spectra differ in bin count");
  BandGaps gaps{};
  const std::size_t n = a.size();
  for (std::size_t band = 0; band < 4; ++band) {
    const std::size_t lo = band * n / 4, hi = (band + 1) * n / 4;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (a.bin_counts[i] == 0 || b.bin_counts[i] == 0) continue;
      sum += std::abs(std::log(a.bin_power[i] + epsilon) - std::log(b.bin_power[i] + epsilon));
      ++used;
    }
    gaps[band] = used ? sum / static_cast<double>(used) : 0.0;
  }
  return gaps;
}

std::vector<BandGaps> spectral_gap(const GridField& pred, const GridField& truth,
                                   const GapOptions& options) {
  require_matching(pred, truth, "spectral_gap");
  const std::size_t bins =
      options.n_bins ? options.n_bins : default_bin_count(truth.height(), truth.width());
  std::vector<BandGaps> out;
  for (std::size_t c = 0; c < truth.channels(); ++c) {
    const double eps = log_floor(truth.channel_names()[c], options.epsilon, truth.dx());
    out.push_back(band_gaps(radial_bin(psd(pred, c), bins, options.scale),
                            radial_bin(psd(truth, c), bins, options.scale), eps));
  }
  return out;
}

const VariableMetrics& MetricsReport::find(const std::string& name) const {
  for (const auto& v : variables) {
    if (v.name == name) return v;
  }
  fail(ErrorCode::ChannelOutOfRange, "metrics report has no variable '" + name + "'");
}

namespace {

GridField report_variables(const GridField& field, const MetricsOptions& options) {
  const bool has_wind = (field.find_channel("u") || field.find_channel("u10")) &&
                        (field.find_channel("v") || field.find_channel("v10"));
  if (options.derived && has_wind) return diagnostic_variables(field, options.method);
  return field;
}

}  // namespace

MetricsReport metrics_report(std::span<const GridField> truth, std::span<const Ensemble> preds,
                             const MetricsOptions& options) {
  if (truth.empty()) fail(ErrorCode::EmptyDataset, "metrics need at least one sample");
  if (truth.size() != preds.size()) {
    fail(ErrorCode::ShapeMismatch, "truth and prediction sample counts differ");
  }
  std::vector<std::string> names;
  std::vector<double> mae_sum, mse_sum, crps_sum;
  std::vector<std::vector<RadialSpectrum>> truth_spec, pred_spec;
  std::size_t bins = 0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    const GridField tv = report_variables(truth[s], options);
    std::vector<GridField> members;
    for (const auto& m : preds[s].members()) members.push_back(report_variables(m, options));
    const Ensemble ens(std::move(members));
    if (ens[0].channel_names() != tv.channel_names()) {
      fail(ErrorCode::ChannelMismatch, "prediction and truth carry different variables");
    }
    if (s == 0) {
      names = tv.channel_names();
      mae_sum.assign(names.size(), 0.0);
      mse_sum.assign(names.size(), 0.0);
      crps_sum.assign(names.size(), 0.0);
      truth_spec.resize(names.size());
      pred_spec.resize(names.size());
      bins = options.gap.n_bins ? options.gap.n_bins : default_bin_count(tv.height(), tv.width());
    } else if (tv.channel_names() != names) {
      fail(ErrorCode::ChannelMismatch, "samples carry different variables");
    }
    const GridField mean = ens.mean();
    const auto a = mae(mean, tv), b = mse(mean, tv), c = crps(ens, tv, options.estimator);
    for (std::size_t k = 0; k < names.size(); ++k) {
      mae_sum[k] += a[k];
      mse_sum[k] += b[k];
      crps_sum[k] += c[k];
      truth_spec[k].push_back(radial_bin(psd(tv, k), bins, options.gap.scale));
      for (const auto& m : ens.members()) {
        pred_spec[k].push_back(radial_bin(psd(m, k), bins, options.gap.scale));
      }
    }
  }
  MetricsReport report;
  report.samples = truth.size();
  const double n = static_cast<double>(truth.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    VariableMetrics vm;
    vm.name = names[k];
    vm.mae = mae_sum[k] / n;
    vm.rmse = std::sqrt(mse_sum[k] / n);
    vm.crps = crps_sum[k] / n;
    const double eps = log_floor(names[k], options.gap.epsilon, truth.front().dx());
    vm.gaps = band_gaps(mean_radial(pred_spec[k]), mean_radial(truth_spec[k]), eps);
    report.variables.push_back(vm);
  }
  return report;
}

}  // namespace spectra
