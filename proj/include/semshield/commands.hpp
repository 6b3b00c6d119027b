#pragma once

// Command implementations behind the `semshield` executable. Each command
// reads and writes files only; any failure surfaces as semshield::Error.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "semshield/errors.hpp"

namespace semshield::cli {

namespace fs = std::filesystem;

struct FitArgs {
  fs::path features, labels, kb, out;
  double lambda = 0.1;
  double ridge = 0.0;
  bool standardize = false;
};

struct FitSummary {
  double residual = 0.0;
  double seconds = 0.0;
};

/// Fits a projection model and writes it as JSON. Prints residual and wall
/// time to `log`.
FitSummary cmd_fit(const FitArgs& args, std::ostream& log);

struct DetectArgs {
  fs::path model, kb, features, predictions;
  std::optional<fs::path> out;  // JSON lines; stdout when absent
};

void cmd_detect(const DetectArgs& args, std::ostream& out);

struct BenchArgs {
  fs::path model, kb, features, labels, predictions;
  std::optional<fs::path> probs, mcd, train_features;
  std::vector<std::string> methods{"semantic", "softmax"};
  fs::path out;
  std::optional<fs::path> emit_csv;
  std::size_t nnd_k = 10;
  unsigned threads = 1;
};

/// Writes the report JSON (and optional CSV); prints an AUC table to `out`.
void cmd_bench(const BenchArgs& args, std::ostream& out);

struct GenArgs {
  fs::path config, out_dir;
  std::optional<fs::path> kb;  // overrides the config's "kb" entry
};

/// Writes train/test interchange files plus meta.json into `out_dir`.
void cmd_gen(const GenArgs& args, std::ostream& log);

struct ScoreArgs {
  fs::path model, kb, features, predictions;
  std::optional<fs::path> out;
  unsigned threads = 1;
};

/// Streams "example_id,d" lines.
void cmd_score(const ScoreArgs& args, std::ostream& out);

/// {"code": ..., "message": ..., "context": ...} on one line.
std::string error_json(const std::string& code, const std::string& message, const std::string& context);

/// SEMSHIELD_THREADS, defaulting to 1.
unsigned threads_from_env();

}  // namespace semshield::cli
