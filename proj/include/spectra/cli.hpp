#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectra/loss.hpp"
#include "spectra/physics.hpp"
#include "spectra/spectral.hpp"

namespace spectra::cli {

enum class Command { Gen, Psd, Diagnose, Compare, Train, Eval };

enum class UsageErrorKind { UnknownFlag, MissingRequired, ConflictingFlags, InvalidValue };

/// Command-line misuse; `run` maps it to exit status 2.
class UsageError : public std::runtime_error {
 public:
  UsageError(UsageErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  UsageErrorKind kind() const noexcept { return kind_; }

 private:
  UsageErrorKind kind_;
};

struct RunConfig {
  Command command = Command::Gen;
  bool help = false;
  std::string help_text;
  int verbosity = 1;
  std::optional<std::uint64_t> seed;

  // gen
  std::string spec_path;
  std::size_t n_samples = 0;
  std::size_t factor = 4;

  // shared paths
  std::vector<std::string> inputs;  // psd --in
  std::string truth;
  std::vector<std::string> preds;
  std::string data;
  std::string validation;
  std::string model;
  std::string out;
  std::string history;

  // spectra / diagnostics
  std::size_t bins = 0;
  BinScale scale = BinScale::Log;
  std::string channel;
  bool mean_over_files = false;
  DerivativeMethod method = DerivativeMethod::Spectral;
  std::optional<bool> fair;  // compare: unset picks fair for M >= 2

  // loss / training
  LossConfig loss{};
  std::size_t epochs = 200;
  double lr = 1e-2;
  double momentum = 0.0;
  std::size_t batch = 0;
  std::size_t kernel = 5;
};

/// Parses argv (argv[0] is the program name). Throws UsageError; `--help`
/// yields a config with help = true and the rendered usage text.
RunConfig parse_args(const std::vector<std::string>& argv);

/// Executes a parsed config: 0 on success, 1 on domain or I/O errors.
int run(const RunConfig& cfg);

/// parse_args + run with exit status 2 on usage errors.
int main_entry(const std::vector<std::string>& argv);

}  // namespace spectra::cli
