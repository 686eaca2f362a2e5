#include "spectra/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "spectra/parallel.hpp"
#include "spectra/synth.hpp"

namespace spectra {

ToyDownscaler::ToyDownscaler(std::size_t factor, std::size_t kernel_size, std::size_t in_channels,
                             std::size_t out_channels)
    : factor_(factor), kernel_size_(kernel_size), in_channels_(in_channels),
      out_channels_(out_channels) {
  if (kernel_size % 2 == 0) fail(ErrorCode::EvenKernel, "kernel size must be odd");
  if (factor == 0) fail(ErrorCode::InvalidConfig, "upsampling factor must be positive");
  if (in_channels == 0 || out_channels == 0) {
    fail(ErrorCode::InvalidConfig, "model needs at least one input and one output channel");
  }
  params_.assign(out_channels * in_channels * kernel_size * kernel_size + out_channels, 0.0);
}

ToyDownscaler init_model(std::size_t factor, std::size_t kernel_size, std::uint64_t seed,
                         std::size_t in_channels, std::size_t out_channels, double noise_std) {
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    fail(ErrorCode::EvenKernel, "kernel size must be odd, got " + std::to_string(kernel_size));
  }
  ToyDownscaler model(factor, kernel_size, in_channels, out_channels);
  Rng rng(stream_seed(seed, 0, 0x1D));
  auto p = model.parameters();
  for (std::size_t i = 0; i < model.bias_offset(); ++i) p[i] = noise_std * rng.normal();
  const std::size_t r = kernel_size / 2;
  for (std::size_t o = 0; o < std::min(in_channels, out_channels); ++o) model.weight(o, o, r, r) += 1.0;
  return model;
}

namespace {

// dst[i][j] += k * src[(i + da) mod H][(j + db) mod W]
void accumulate_shifted(double* dst, const double* src, std::size_t h, std::size_t w, long da,
                        long db, double k) {
  const auto hl = static_cast<long>(h), wl = static_cast<long>(w);
  const auto shift = static_cast<std::size_t>(((db % wl) + wl) % wl);
  for (std::size_t i = 0; i < h; ++i) {
    const auto sr = static_cast<std::size_t>(((static_cast<long>(i) + da) % hl + hl) % hl);
    const double* s = src + sr * w;
    double* d = dst + i * w;
    const std::size_t split = w - shift;
    for (std::size_t j = 0; j < split; ++j) d[j] += k * s[j + shift];
    for (std::size_t j = split; j < w; ++j) d[j] += k * s[j - split];
  }
}

// sum_ij g[i][j] * src[(i + da) mod H][(j + db) mod W]
double dot_shifted(const double* g, const double* src, std::size_t h, std::size_t w, long da,
                   long db) {
  const auto hl = static_cast<long>(h), wl = static_cast<long>(w);
  const auto shift = static_cast<std::size_t>(((db % wl) + wl) % wl);
  double total = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    const auto sr = static_cast<std::size_t>(((static_cast<long>(i) + da) % hl + hl) % hl);
    const double* s = src + sr * w;
    const double* gi = g + i * w;
    const std::size_t split = w - shift;
    double row = 0.0;
    for (std::size_t j = 0; j < split; ++j) row += gi[j] * s[j + shift];
    for (std::size_t j = split; j < w; ++j) row += gi[j] * s[j - split];
    total += row;
  }
  return total;
}

std::vector<double> upsample_values(const GridField& input, std::size_t factor) {
  const std::size_t h = input.height() * factor, w = input.width() * factor;
  std::vector<double> up(input.channels() * h * w);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    auto src = input.channel(c);
    double* dst = up.data() + c * h * w;
    for (std::size_t i = 0; i < h; ++i) {
      const double* srow = src.data() + (i / factor) * input.width();
      for (std::size_t j = 0; j < w; ++j) dst[i * w + j] = srow[j / factor];
    }
  }
  return up;
}

void check_input(const ToyDownscaler& model, const GridField& input) {
  if (input.channels() != model.in_channels()) {
    fail(ErrorCode::ChannelMismatch, "model expects " + std::to_string(model.in_channels()) +
                                         " input channels, got " + std::to_string(input.channels()));
  }
}

// Output planes for pre-upsampled inputs.
std::vector<double> convolve(const ToyDownscaler& model, const std::vector<double>& up,
                             std::size_t h, std::size_t w) {
  const std::size_t n = h * w, k = model.kernel_size();
  const long r = static_cast<long>(k / 2);
  const auto p = model.parameters();
  std::vector<double> out(model.out_channels() * n);
  for (std::size_t o = 0; o < model.out_channels(); ++o) {
    double* dst = out.data() + o * n;
    std::fill(dst, dst + n, p[model.bias_offset() + o]);
    for (std::size_t c = 0; c < model.in_channels(); ++c) {
      const double* src = up.data() + c * n;
      const std::size_t off = model.kernel_offset(o, c);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          const double wt = p[off + a * k + b];
          if (wt != 0.0) {
            accumulate_shifted(dst, src, h, w, static_cast<long>(a) - r, static_cast<long>(b) - r, wt);
          }
        }
      }
    }
  }
  return out;
}

std::vector<double> parameter_gradient(const ToyDownscaler& model, const std::vector<double>& up,
                                       std::span<const double> grad_out, std::size_t h,
                                       std::size_t w) {
  const std::size_t n = h * w, k = model.kernel_size();
  const long r = static_cast<long>(k / 2);
  std::vector<double> grad(model.parameter_count(), 0.0);
  for (std::size_t o = 0; o < model.out_channels(); ++o) {
    const double* g = grad_out.data() + o * n;
    for (std::size_t c = 0; c < model.in_channels(); ++c) {
      const double* src = up.data() + c * n;
      const std::size_t off = model.kernel_offset(o, c);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          grad[off + a * k + b] =
              dot_shifted(g, src, h, w, static_cast<long>(a) - r, static_cast<long>(b) - r);
        }
      }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += g[i];
    grad[model.bias_offset() + o] = sum;
  }
  return grad;
}

std::vector<std::string> output_names(const ToyDownscaler& model, const GridField& input) {
  std::vector<std::string> names;
  for (std::size_t o = 0; o < model.out_channels(); ++o) {
    names.push_back(o < input.channels() ? input.channel_names()[o] : "out" + std::to_string(o));
  }
  return names;
}

struct PreparedSample {
  std::vector<double> up;
  std::vector<std::vector<double>> log_truth;  // per output channel
  const GridField* target = nullptr;
};

PreparedSample prepare(const ToyDownscaler& model, const FieldPair& pair, double epsilon) {
  check_input(model, pair.input);
  const GridField& t = pair.target;
  if (t.height() != pair.input.height() * model.factor() ||
      t.width() != pair.input.width() * model.factor()) {
    fail(ErrorCode::ShapeMismatch, "target grid does not match input grid times model factor");
  }
  if (t.channels() < model.out_channels()) {
    fail(ErrorCode::ChannelMismatch, "target has fewer channels than the model outputs");
  }
  PreparedSample s;
  s.up = upsample_values(pair.input, model.factor());
  s.target = &t;
  for (std::size_t o = 0; o < model.out_channels(); ++o) {
    s.log_truth.push_back(log_psd(t.channel(o), t.height(), t.width(), t.dx(), epsilon));
  }
  return s;
}

struct SampleLoss {
  double total = 0.0;
  double base = 0.0;
  double psd = 0.0;
  std::vector<double> grad;
};

SampleLoss sample_loss(const ToyDownscaler& model, const PreparedSample& s, const LossConfig& cfg,
                       bool with_grad) {
  const GridField& t = *s.target;
  const std::size_t h = t.height(), w = t.width(), n = h * w;
  const auto pred = convolve(model, s.up, h, w);
  std::vector<double> gout(with_grad ? pred.size() : 0, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  SampleLoss out;
  const bool psd_grad = with_grad && cfg.lambda > 0.0;
  for (std::size_t o = 0; o < model.out_channels(); ++o) {
    auto truth = t.channel(o);
    std::span<const double> p(pred.data() + o * n, n);
    double base = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = p[i] - truth[i];
      base += cfg.base == BaseLoss::L2 ? r * r : std::abs(r);
      if (with_grad) {
        gout[o * n + i] = cfg.base == BaseLoss::L2
                              ? 2.0 * r * inv_n
                              : (r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0));
      }
    }
    out.base += base * inv_n;
    const auto pl = psd_loss_from_log_truth(s.log_truth[o], p, h, w, t.dx(), cfg.epsilon, psd_grad);
    out.psd += pl.value;
    if (psd_grad) {
      for (std::size_t i = 0; i < n; ++i) gout[o * n + i] += cfg.lambda * pl.grad[i];
    }
  }
  out.total = out.base + cfg.lambda * out.psd;
  if (with_grad) out.grad = parameter_gradient(model, s.up, gout, h, w);
  return out;
}

std::vector<PreparedSample> prepare_all(const ToyDownscaler& model,
                                        std::span<const FieldPair> data, double epsilon) {
  std::vector<PreparedSample> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) { out[i] = prepare(model, data[i], epsilon); });
  return out;
}

struct ValidationStats {
  double mae = 0.0;
  double gap = 0.0;
};

ValidationStats validate(const ToyDownscaler& model, std::span<const PreparedSample> samples,
                         const GapOptions& gap) {
  const std::size_t oc = model.out_channels();
  std::vector<std::vector<double>> abs_err(samples.size());
  std::vector<std::vector<RadialSpectrum>> pred_spec(samples.size()), truth_spec(samples.size());
  parallel_for(samples.size(), [&](std::size_t s) {
    const GridField& t = *samples[s].target;
    const std::size_t h = t.height(), w = t.width(), n = h * w;
    const std::size_t bins = gap.n_bins ? gap.n_bins : default_bin_count(h, w);
    const auto pred = convolve(model, samples[s].up, h, w);
    for (std::size_t o = 0; o < oc; ++o) {
      auto truth = t.channel(o);
      std::span<const double> p(pred.data() + o * n, n);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += std::abs(p[i] - truth[i]);
      abs_err[s].push_back(sum / static_cast<double>(n));
      pred_spec[s].push_back(radial_bin(psd(dft2(p, h, w, t.dx())), bins, gap.scale));
      truth_spec[s].push_back(radial_bin(psd(t, o), bins, gap.scale));
    }
  });
  ValidationStats stats;
  for (std::size_t o = 0; o < oc; ++o) {
    double mae_sum = 0.0;
    std::vector<RadialSpectrum> ps, ts;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      mae_sum += abs_err[s][o];
      ps.push_back(pred_spec[s][o]);
      ts.push_back(truth_spec[s][o]);
    }
    stats.mae += mae_sum / static_cast<double>(samples.size());
    stats.gap += band_gaps(mean_radial(ps), mean_radial(ts), gap.epsilon)[3];
  }
  stats.mae /= static_cast<double>(oc);
  stats.gap /= static_cast<double>(oc);
  return stats;
}

}  // namespace

GridField upsample_nearest(const GridField& input, std::size_t factor) {
  if (factor == 0) fail(ErrorCode::InvalidConfig, "upsampling factor must be positive");
  return make_field(upsample_values(input, factor), input.height() * factor,
                    input.width() * factor, input.dx() / static_cast<double>(factor),
                    input.channel_names());
}

GridField forward(const ToyDownscaler& model, const GridField& input) {
  check_input(model, input);
  const std::size_t h = input.height() * model.factor(), w = input.width() * model.factor();
  auto out = convolve(model, upsample_values(input, model.factor()), h, w);
  return make_field(std::move(out), h, w, input.dx() / static_cast<double>(model.factor()),
                    output_names(model, input));
}

std::vector<double> backward(const ToyDownscaler& model, const GridField& input,
                             const GridField& grad_wrt_output) {
  check_input(model, input);
  const std::size_t h = input.height() * model.factor(), w = input.width() * model.factor();
  if (grad_wrt_output.height() != h || grad_wrt_output.width() != w ||
      grad_wrt_output.channels() != model.out_channels()) {
    fail(ErrorCode::ShapeMismatch, "output gradient does not match the model output shape");
  }
  return parameter_gradient(model, upsample_values(input, model.factor()),
                            grad_wrt_output.values(), h, w);
}

double dataset_loss(const ToyDownscaler& model, std::span<const FieldPair> dataset,
                    const LossConfig& cfg, std::vector<double>* grad) {
  cfg.validate();
  if (dataset.empty()) fail(ErrorCode::EmptyDataset, "dataset is empty");
  const auto prepared = prepare_all(model, dataset, cfg.epsilon);
  std::vector<SampleLoss> losses(prepared.size());
  parallel_for(prepared.size(), [&](std::size_t i) {
    losses[i] = sample_loss(model, prepared[i], cfg, grad != nullptr);
  });
  const double inv = 1.0 / static_cast<double>(prepared.size());
  double total = 0.0;
  if (grad) grad->assign(model.parameter_count(), 0.0);
  for (const auto& l : losses) {
    total += l.total;
    if (grad) {
      for (std::size_t k = 0; k < l.grad.size(); ++k) (*grad)[k] += l.grad[k];
    }
  }
  if (grad) {
    for (auto& g : *grad) g *= inv;
  }
  return total * inv;
}

TrainResult train(std::span<const FieldPair> dataset, std::span<const FieldPair> validation,
                  const TrainConfig& cfg) {
  cfg.loss.validate();
  if (dataset.empty()) fail(ErrorCode::EmptyDataset, "training dataset is empty");
  if (!(cfg.lr > 0.0)) fail(ErrorCode::InvalidConfig, "learning rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    fail(ErrorCode::InvalidConfig, "momentum must lie in [0, 1)");
  }
  const FieldPair& first = dataset.front();
  if (first.target.height() % first.input.height() != 0) {
    fail(ErrorCode::ShapeMismatch, "target grid is not an integer refinement of the input grid");
  }
  const std::size_t factor = first.target.height() / first.input.height();
  ToyDownscaler model = init_model(factor, cfg.kernel_size, cfg.seed, first.input.channels(),
                                   first.target.channels(), cfg.init_noise);

  const auto train_set = prepare_all(model, dataset, cfg.loss.epsilon);
  const auto val_set = validation.empty() ? std::vector<PreparedSample>{}
                                          : prepare_all(model, validation, cfg.loss.epsilon);
  std::span<const PreparedSample> val_view = validation.empty() ? train_set : val_set;

  const std::size_t n = train_set.size();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<double> velocity(model.parameter_count(), 0.0);
  TrainResult result{model, {}};
  Rng shuffle_rng(stream_seed(cfg.seed, 0, 0xBA7C));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (batch < n) {
      // Fisher-Yates with the portable generator.
      for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(shuffle_rng.uniform() * static_cast<double>(i + 1));
        std::swap(order[i], order[std::min(j, i)]);
      }
    }
    EpochRecord rec;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::vector<SampleLoss> losses(stop - start);
      parallel_for(losses.size(), [&](std::size_t i) {
        losses[i] = sample_loss(model, train_set[order[start + i]], cfg.loss, true);
      });
      std::vector<double> grad(model.parameter_count(), 0.0);
      for (const auto& l : losses) {
        rec.total += l.total;
        rec.base += l.base;
        rec.psd += l.psd;
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += l.grad[k];
      }
      const double inv = 1.0 / static_cast<double>(losses.size());
      auto p = model.parameters();
      for (std::size_t k = 0; k < grad.size(); ++k) {
        velocity[k] = cfg.momentum * velocity[k] - cfg.lr * grad[k] * inv;
        p[k] += velocity[k];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    rec.total *= inv_n;
    rec.base *= inv_n;
    rec.psd *= inv_n;
    bool finite = std::isfinite(rec.total);
    for (double x : model.parameters()) finite = finite && std::isfinite(x);
    result.history.batch_orders.push_back(std::move(order));
    if (!finite) {
      result.history.epochs.push_back(rec);
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch),
                            std::move(result.history));
    }
    const auto v = validate(model, val_view, cfg.gap);
    rec.val_mae = v.mae;
    rec.val_gap = v.gap;
    result.history.epochs.push_back(rec);
  }
  result.model = std::move(model);
  return result;
}

Evaluation evaluate(const ToyDownscaler& model, std::span<const FieldPair> dataset,
                    const EvalOptions& options) {
  if (dataset.empty()) fail(ErrorCode::EmptyDataset, "evaluation dataset is empty");
  std::vector<GridField> truths;
  std::vector<GridField> preds;
  std::vector<Ensemble> ensembles;
  for (const auto& pair : dataset) {
    GridField pred = forward(model, pair.input);
    std::vector<GridField> channels;
    for (std::size_t o = 0; o < model.out_channels(); ++o) channels.push_back(pair.target.extract(o));
    truths.push_back(stack_channels(channels));
    ensembles.emplace_back(std::vector<GridField>{pred});
    preds.push_back(std::move(pred));
  }
  MetricsOptions mopts;
  mopts.estimator = CrpsEstimator::Standard;
  mopts.gap = options.gap;
  mopts.method = options.method;
  DiagnosticsOptions dopts;
  dopts.method = options.method;
  dopts.n_bins = options.gap.n_bins;
  dopts.scale = options.gap.scale;
  dopts.epsilon = options.gap.epsilon;
  return Evaluation{metrics_report(truths, ensembles, mopts), diagnostics_report(truths, preds, dopts)};
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_le(const std::string& bytes, std::size_t pos, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_model(const ToyDownscaler& model) {
  std::string out = "TDS1";
  put_u32(out, static_cast<std::uint32_t>(model.factor()));
  put_u32(out, static_cast<std::uint32_t>(model.kernel_size()));
  put_u32(out, static_cast<std::uint32_t>(model.in_channels()));
  put_u32(out, static_cast<std::uint32_t>(model.out_channels()));
  for (double p : model.parameters()) {
    const auto bits = std::bit_cast<std::uint64_t>(p);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }
  return out;
}

ToyDownscaler decode_model(const std::string& bytes, const std::string& source) {
  if (bytes.size() < 20 || bytes.compare(0, 4, "TDS1") != 0) {
    fail(ErrorCode::FormatError, source + ": not a TDS1 model file");
  }
  const auto factor = get_le(bytes, 4, 4), kernel = get_le(bytes, 8, 4);
  const auto in_ch = get_le(bytes, 12, 4), out_ch = get_le(bytes, 16, 4);
  if (kernel > 1024 || in_ch > 4096 || out_ch > 4096) {
    fail(ErrorCode::FormatError, source + ": implausible model header");
  }
  ToyDownscaler model(factor, kernel, in_ch, out_ch);
  if (bytes.size() != 20 + 8 * model.parameter_count()) {
    fail(ErrorCode::FormatError, source + ": parameter block has the wrong length");
  }
  auto p = model.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::bit_cast<double>(get_le(bytes, 20 + 8 * i, 8));
  }
  return model;
}

}  // namespace spectra
