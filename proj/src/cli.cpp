#include "spectra/cli.hpp"

#include <algorithm>
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "spectra/error.hpp"
#include "spectra/io.hpp"
#include "spectra/metrics.hpp"
#include "spectra/synth.hpp"
#include "spectra/trainer.hpp"

namespace fs = std::filesystem;

namespace spectra::cli {
namespace {

const std::map<std::string, DerivativeMethod> kMethods{
    {"spectral", DerivativeMethod::Spectral}, {"fd", DerivativeMethod::CentralFD}};
const std::map<std::string, BaseLoss> kBaseLosses{{"l1", BaseLoss::L1}, {"l2", BaseLoss::L2}};

void add_loss_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--lambda", cfg.loss.lambda, "PSD loss weight")->check(CLI::NonNegativeNumber);
  sub->add_option("--eps", cfg.loss.epsilon, "floor inside log(PSD + eps)")->check(CLI::PositiveNumber);
  sub->add_option("--base-loss", cfg.loss.base, "pixel loss: l1 or l2")
      ->transform(CLI::CheckedTransformer(kBaseLosses, CLI::ignore_case));
}

void add_bin_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--bins", cfg.bins, "radial bins (default min(H,W)/2)")->check(CLI::Range(2, 1 << 20));
  auto* log_bins = sub->add_flag("--log-bins", "logarithmically spaced bins (default)");
  auto* lin_bins = sub->add_flag("--linear-bins", "linearly spaced bins");
  log_bins->excludes(lin_bins);
  lin_bins->excludes(log_bins);
  sub->callback([&cfg, lin_bins] {
    if (lin_bins->count() > 0) cfg.scale = BinScale::Linear;
  });
}

void add_method_flag(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--method", cfg.method, "derivative method: spectral or fd")
      ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
}

UsageErrorKind classify(const CLI::ParseError& e) {
  if (dynamic_cast<const CLI::ExtrasError*>(&e)) return UsageErrorKind::UnknownFlag;
  if (dynamic_cast<const CLI::RequiredError*>(&e)) return UsageErrorKind::MissingRequired;
  if (dynamic_cast<const CLI::ExcludesError*>(&e)) return UsageErrorKind::ConflictingFlags;
  return UsageErrorKind::InvalidValue;
}

}  // namespace

RunConfig parse_args(const std::vector<std::string>& argv) {
  RunConfig cfg;
  CLI::App app{"Spectral diagnostics and PSD-loss toolkit for downscaled fields", "spectra"};
  app.fallthrough();
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "global seed override");
  auto* verbose = app.add_flag("-v,--verbose", "more progress output");
  auto* quiet = app.add_flag("-q,--quiet", "no progress output");
  verbose->excludes(quiet);
  quiet->excludes(verbose);

  auto* gen = app.add_subcommand("gen", "generate a synthetic paired dataset");
  gen->add_option("--spec", cfg.spec_path, "key = value spec file (defaults when omitted)")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", cfg.out, "output directory")->required();
  gen->add_option("--n", cfg.n_samples, "number of pairs")->required();
  gen->add_option("--factor", cfg.factor, "integer downscaling factor")->check(CLI::PositiveNumber);

  auto* psd_cmd = app.add_subcommand("psd", "radially binned PSD of GRD1 files");
  psd_cmd->add_option("--in", cfg.inputs, "input GRD1 file (repeatable)")->required();
  psd_cmd->add_option("--out", cfg.out, "output directory (default: current directory)");
  psd_cmd->add_option("--channel", cfg.channel, "restrict to one channel name");
  psd_cmd->add_flag("--mean-over-files", cfg.mean_over_files, "average spectra over all inputs");
  add_bin_flags(psd_cmd, cfg);

  auto* diag = app.add_subcommand("diagnose", "physics-derived spectral diagnostics");
  diag->add_option("--truth", cfg.truth, "reference GRD1 file")->required();
  std::string pred_single;
  diag->add_option("--pred", pred_single, "prediction GRD1 file")->required();
  diag->add_option("--out", cfg.out, "output directory (default: current directory)");
  diag->add_option("--eps", cfg.loss.epsilon, "floor inside log(PSD + eps)")->check(CLI::PositiveNumber);
  add_method_flag(diag, cfg);
  add_bin_flags(diag, cfg);

  auto* cmp = app.add_subcommand("compare", "pixel, probabilistic and spectral metrics");
  cmp->add_option("--truth", cfg.truth, "reference GRD1 file")->required();
  cmp->add_option("--pred", cfg.preds, "prediction or ensemble member (repeatable)")->required();
  cmp->add_option("--out", cfg.out, "output directory (default: current directory)");
  auto* fair = cmp->add_flag("--fair", "fair CRPS estimator (needs >= 2 members)");
  auto* standard = cmp->add_flag("--standard", "standard CRPS estimator");
  fair->excludes(standard);
  standard->excludes(fair);
  cmp->add_option("--eps", cfg.loss.epsilon, "floor inside log(PSD + eps)")->check(CLI::PositiveNumber);
  add_method_flag(cmp, cfg);
  add_bin_flags(cmp, cfg);

  auto* tr = app.add_subcommand("train", "train the toy downscaler");
  tr->add_option("--data", cfg.data, "training manifest.csv")->required();
  tr->add_option("--val", cfg.validation, "validation manifest.csv");
  tr->add_option("--out", cfg.model, "model file to write")->required();
  tr->add_option("--history", cfg.history, "history CSV to write (default: history.csv beside the model)");
  tr->add_option("--epochs", cfg.epochs, "number of epochs");
  tr->add_option("--lr", cfg.lr, "step size")->check(CLI::PositiveNumber);
  tr->add_option("--momentum", cfg.momentum, "heavy-ball momentum in [0,1)")->check(CLI::Range(0.0, 0.999999));
  tr->add_option("--batch", cfg.batch, "mini-batch size (0 = full batch)");
  tr->add_option("--kernel", cfg.kernel, "odd kernel size");
  add_loss_flags(tr, cfg);

  auto* ev = app.add_subcommand("eval", "evaluate a trained model on a dataset");
  ev->add_option("--model", cfg.model, "model file")->required();
  ev->add_option("--data", cfg.data, "manifest.csv")->required();
  ev->add_option("--out", cfg.out, "output directory (default: current directory)");
  add_loss_flags(ev, cfg);
  add_method_flag(ev, cfg);
  add_bin_flags(ev, cfg);

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream out, err;
      app.exit(e, out, err);
      cfg.help = true;
      cfg.help_text = out.str() + err.str();
      return cfg;
    }
    throw UsageError(classify(e), e.what());
  }

  if (seed_opt->count() > 0) cfg.seed = seed;
  if (verbose->count() > 0) cfg.verbosity = 2;
  if (quiet->count() > 0) cfg.verbosity = 0;
  if (gen->parsed()) {
    cfg.command = Command::Gen;
  } else if (psd_cmd->parsed()) {
    cfg.command = Command::Psd;
  } else if (diag->parsed()) {
    cfg.command = Command::Diagnose;
    cfg.preds = {pred_single};
  } else if (cmp->parsed()) {
    cfg.command = Command::Compare;
    if (fair->count() > 0) cfg.fair = true;
    if (standard->count() > 0) cfg.fair = false;
  } else if (tr->parsed()) {
    cfg.command = Command::Train;
    if (cfg.kernel % 2 == 0) {
      throw UsageError(UsageErrorKind::InvalidValue, "--kernel: kernel size must be odd");
    }
  } else {
    cfg.command = Command::Eval;
  }
  return cfg;
}

namespace {

void log(const RunConfig& cfg, const std::string& msg) {
  if (cfg.verbosity > 0) std::cerr << msg << "\n";
}

void require_file(const std::string& path, const char* flag) {
  if (!fs::is_regular_file(path)) {
    fail(ErrorCode::IoError, std::string(flag) + ": no such file '" + path + "'");
  }
}

std::string radial_csv(const RadialSpectrum& r) {
  std::string out = "k,psd,count\n";
  for (std::size_t b = 0; b < r.size(); ++b) {
    out += io::format_double(r.bin_centers[b]) + "," + io::format_double(r.bin_power[b]) + "," +
           std::to_string(r.bin_counts[b]) + "\n";
  }
  return out;
}

std::string diagnostics_csv(const DiagnosticsReport& report) {
  std::string out = "variable,k_bin,psd_truth,psd_pred,log_gap\n";
  for (const auto& v : report.variables) {
    for (std::size_t b = 0; b < v.truth.size(); ++b) {
      if (v.truth.bin_counts[b] == 0) continue;
      out += v.name + "," + io::format_double(v.truth.bin_centers[b]) + "," +
             io::format_double(v.truth.bin_power[b]) + "," + io::format_double(v.pred.bin_power[b]) +
             "," + io::format_double(v.log_gap[b]) + "\n";
    }
  }
  return out;
}

std::string metrics_csv(const MetricsReport& report) {
  std::string out = "variable,mae,rmse,crps,gap_q1,gap_q2,gap_q3,gap_q4\n";
  for (const auto& v : report.variables) {
    out += v.name + "," + io::format_double(v.mae) + "," + io::format_double(v.rmse) + "," +
           io::format_double(v.crps);
    for (double g : v.gaps) out += "," + io::format_double(g);
    out += "\n";
  }
  return out;
}

std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,total,base,psd,val_mae,val_gap\n";
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    const auto& r = h.epochs[e];
    out += std::to_string(e) + "," + io::format_double(r.total) + "," + io::format_double(r.base) +
           "," + io::format_double(r.psd) + "," + io::format_double(r.val_mae) + "," +
           io::format_double(r.val_gap) + "\n";
  }
  return out;
}

GapOptions gap_options(const RunConfig& cfg) {
  return GapOptions{cfg.bins, cfg.scale, cfg.loss.epsilon};
}

fs::path output_dir(const RunConfig& cfg) { return cfg.out.empty() ? fs::path(".") : fs::path(cfg.out); }

int run_gen(const RunConfig& cfg) {
  SynthSpec spec = cfg.spec_path.empty() ? SynthSpec{} : parse_synth_spec(io::read_file(cfg.spec_path));
  if (cfg.seed) spec.seed = *cfg.seed;
  spec.validate();
  if (spec.height % cfg.factor != 0 || spec.width % cfg.factor != 0) {
    fail(ErrorCode::NotDivisible, "grid is not divisible by --factor");
  }
  const fs::path out(cfg.out);
  fs::create_directories(out);
  std::vector<io::ManifestEntry> entries;
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    SyntheticSample s = make_sample(spec, i);
    const GridField coarse = block_average_downsample(s.truth, cfg.factor);
    char stem[32];
    std::snprintf(stem, sizeof stem, "pair_%04zu", i);
    const std::string input = std::string(stem) + ".input.grd";
    const std::string target = std::string(stem) + ".target.grd";
    io::write_grd(out / input, coarse);
    io::write_grd(out / target, s.truth);
    entries.push_back({i, input, target, s.seed, spec.region_tag});
  }
  io::write_atomic(out / "manifest.csv", io::encode_manifest(entries));
  log(cfg, "wrote " + std::to_string(entries.size()) + " pairs to " + out.string());
  return 0;
}

int run_psd(const RunConfig& cfg) {
  for (const auto& in : cfg.inputs) require_file(in, "--in");
  std::vector<GridField> fields;
  for (const auto& in : cfg.inputs) fields.push_back(io::read_grd(in));
  const fs::path out = output_dir(cfg);
  fs::create_directories(out);
  std::map<std::string, std::vector<RadialSpectrum>> per_channel;
  std::vector<std::string> order;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const GridField& field = fields[f];
    const std::size_t bins = cfg.bins ? cfg.bins : default_bin_count(field.height(), field.width());
    for (std::size_t c = 0; c < field.channels(); ++c) {
      const std::string& name = field.channel_names()[c];
      if (!cfg.channel.empty() && name != cfg.channel) continue;
      const RadialSpectrum r = radial_bin(psd(field, c), bins, cfg.scale);
      if (cfg.mean_over_files) {
        if (!per_channel.count(name)) order.push_back(name);
        per_channel[name].push_back(r);
      } else {
        const std::string stem = fs::path(cfg.inputs[f]).stem().string();
        io::write_atomic(out / (stem + "_" + name + ".csv"), radial_csv(r));
      }
    }
    if (!cfg.channel.empty() && !field.find_channel(cfg.channel)) {
      fail(ErrorCode::ChannelOutOfRange, cfg.inputs[f] + ": no channel named '" + cfg.channel + "'");
    }
  }
  for (const auto& name : order) {
    io::write_atomic(out / ("mean_" + name + ".csv"), radial_csv(mean_radial(per_channel[name])));
  }
  return 0;
}

int run_diagnose(const RunConfig& cfg) {
  require_file(cfg.truth, "--truth");
  require_file(cfg.preds.front(), "--pred");
  const GridField truth = io::read_grd(cfg.truth);
  const GridField pred = io::read_grd(cfg.preds.front());
  DiagnosticsOptions opts{cfg.method, cfg.bins, cfg.scale, cfg.loss.epsilon};
  const auto report = diagnostics_report(truth, pred, opts);
  fs::create_directories(output_dir(cfg));
  io::write_atomic(output_dir(cfg) / "diagnostics.csv", diagnostics_csv(report));
  return 0;
}

int run_compare(const RunConfig& cfg) {
  require_file(cfg.truth, "--truth");
  for (const auto& p : cfg.preds) require_file(p, "--pred");
  const GridField truth = io::read_grd(cfg.truth);
  std::vector<GridField> members;
  for (const auto& p : cfg.preds) members.push_back(io::read_grd(p));
  MetricsOptions opts;
  const bool use_fair = cfg.fair.value_or(members.size() >= 2);
  opts.estimator = use_fair ? CrpsEstimator::Fair : CrpsEstimator::Standard;
  opts.gap = gap_options(cfg);
  opts.method = cfg.method;
  std::vector<Ensemble> ens;
  ens.emplace_back(std::move(members));
  const auto report = metrics_report(std::span<const GridField>(&truth, 1), ens, opts);
  fs::create_directories(output_dir(cfg));
  io::write_atomic(output_dir(cfg) / "metrics.csv", metrics_csv(report));
  return 0;
}

int run_train(const RunConfig& cfg) {
  require_file(cfg.data, "--data");
  if (!cfg.validation.empty()) require_file(cfg.validation, "--val");
  const auto data = io::load_dataset(cfg.data);
  const auto val = cfg.validation.empty() ? std::vector<FieldPair>{} : io::load_dataset(cfg.validation);
  TrainConfig tc;
  tc.loss = cfg.loss;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr;
  tc.momentum = cfg.momentum;
  tc.batch_size = cfg.batch;
  tc.kernel_size = cfg.kernel;
  if (cfg.seed) tc.seed = *cfg.seed;
  tc.gap = gap_options(cfg);
  const fs::path history =
      cfg.history.empty() ? fs::path(cfg.model).parent_path() / "history.csv" : fs::path(cfg.history);
  try {
    const TrainResult result = train(data, val, tc);
    io::write_atomic(cfg.model, encode_model(result.model));
    io::write_atomic(history, history_csv(result.history));
    if (!result.history.epochs.empty()) {
      const auto& last = result.history.epochs.back();
      log(cfg, "final loss " + io::format_double(last.total) + ", val MAE " +
                   io::format_double(last.val_mae) + ", val top-quartile gap " +
                   io::format_double(last.val_gap));
    }
  } catch (const DivergenceError& e) {
    io::write_atomic(history, history_csv(e.history()));
    throw;
  }
  return 0;
}

int run_eval(const RunConfig& cfg) {
  require_file(cfg.model, "--model");
  require_file(cfg.data, "--data");
  const ToyDownscaler model = decode_model(io::read_file(cfg.model), cfg.model);
  const auto data = io::load_dataset(cfg.data);
  EvalOptions opts{cfg.method, gap_options(cfg)};
  const Evaluation ev = evaluate(model, data, opts);
  const fs::path out = output_dir(cfg);
  fs::create_directories(out);
  io::write_atomic(out / "metrics.csv", metrics_csv(ev.metrics));
  io::write_atomic(out / "diagnostics.csv", diagnostics_csv(ev.diagnostics));
  return 0;
}

}  // namespace

int run(const RunConfig& cfg) {
  if (cfg.help) {
    std::cout << cfg.help_text;
    return 0;
  }
  try {
    switch (cfg.command) {
      case Command::Gen: return run_gen(cfg);
      case Command::Psd: return run_psd(cfg);
      case Command::Diagnose: return run_diagnose(cfg);
      case Command::Compare: return run_compare(cfg);
      case Command::Train: return run_train(cfg);
      case Command::Eval: return run_eval(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [IoError]: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int main_entry(const std::vector<std::string>& argv) {
  RunConfig cfg;
  try {
    cfg = parse_args(argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return 2;
  }
  return run(cfg);
}

}  // namespace spectra::cli
