// Command layer behind the CLI: resolved run configs, run-directory artifacts,
// and one function per subcommand. Commands validate their configuration fully
// before touching data and write deterministic artifacts into append-only run
// directories.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flowcast/train.hpp"

namespace flowcast::cli {

struct SelectionSettings {
  std::string method = "embedded";  // none | filter | wrapper | embedded | autoencoder
  int k = 20;
};

struct ArchSettings {
  std::vector<int> indrnn_widths = {64, 64};
  int lstm_width = 64;
  std::string activation = "relu";
  bool candidate_tanh = false;
};

struct RunConfig {
  std::string data_path;
  bool has_header = false;
  bool nsl_kdd = false;  // bundled 43-column layout; label/difficulty excluded
  std::string target = "src_bytes";
  int window_length = 10;
  double train_fraction = 0.8;
  SelectionSettings selection;
  ArchSettings arch;
  train::TrainConfig train_cfg;
  double threshold_k_sigma = 3.0;
  uint64_t seed = 42;
  std::string out_dir;
  bool overwrite = false;
  bool report_raw_units = false;
};

RunConfig config_from_json_file(const std::string& path);
std::string to_json(const RunConfig& cfg);

// Artifact file names inside a run directory.
namespace artifact {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kEncoding = "encoding.json";
inline constexpr const char* kNormalization = "normalization.json";
inline constexpr const char* kPrepared = "prepared.bin";
inline constexpr const char* kSelection = "selection.json";
inline constexpr const char* kCheckpoint = "checkpoint.json";
inline constexpr const char* kLossCsv = "loss.csv";
inline constexpr const char* kThreshold = "threshold.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kSweepCsv = "sweep.csv";
}  // namespace artifact

void cmd_prep(const RunConfig& cfg);
void cmd_select(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);

struct DetectSummary {
  long records = 0;
  long verdicts = 0;
  long anomalies = 0;
  long errors = 0;
  long p99_latency_micros = 0;
};

// Streams CSV records from input_path ("-" for stdin); verdict JSON objects go
// to `out` one per line, malformed-record errors and the final summary to `err`.
DetectSummary cmd_detect(const RunConfig& cfg, const std::string& input_path,
                         std::ostream& out, std::ostream& err);

// Builds a small network from the configured architecture and reports the
// worst finite-difference gradient error per tensor. Returns the max relative
// error; the CLI exits nonzero above 1e-4.
double cmd_gradcheck(const RunConfig& cfg, bool corrupt_debug, std::ostream& out);

// Runs select -> train -> eval for every selection method into per-method
// subdirectories and writes a grid-shaped CSV (model,selection,mae,rmse).
void cmd_sweep(const RunConfig& cfg);

// ConfigError -> 1, DataError -> 2, NumericError -> 3, anything else -> 1.
int exit_code_for(const std::exception& e);

}  // namespace flowcast::cli
