// flowcast command-line interface.
//
// Subcommands: prep, select, train, eval, detect, gradcheck, sweep.
// Exit codes: 0 success, 1 validation error, 2 data error, 3 numeric abort.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flowcast/commands.hpp"

namespace {

struct FlagOverrides {
  std::string config_path, data, target, out, method;
  int window_length = -1, k = -1, epochs = -1, batch_size = -1;
  double train_fraction = -1.0, learning_rate = -1.0;
  long long seed = -1;
  bool force = false, nsl_kdd = false, has_header = false, raw_units = false;
};

// Defaults -> config file -> flags; flags win.
flowcast::cli::RunConfig resolve(const FlagOverrides& f) {
  flowcast::cli::RunConfig cfg;
  if (!f.config_path.empty()) cfg = flowcast::cli::config_from_json_file(f.config_path);
  if (!f.data.empty()) cfg.data_path = f.data;
  if (!f.target.empty()) cfg.target = f.target;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.method.empty()) cfg.selection.method = f.method;
  if (f.window_length > 0) cfg.window_length = f.window_length;
  if (f.k > 0) cfg.selection.k = f.k;
  if (f.epochs >= 0) cfg.train_cfg.epochs = f.epochs;
  if (f.batch_size > 0) cfg.train_cfg.batch_size = f.batch_size;
  if (f.train_fraction > 0.0) cfg.train_fraction = f.train_fraction;
  if (f.learning_rate > 0.0) cfg.train_cfg.learning_rate = f.learning_rate;
  if (f.seed >= 0) cfg.seed = static_cast<uint64_t>(f.seed);
  if (f.force) cfg.overwrite = true;
  if (f.nsl_kdd) cfg.nsl_kdd = true;
  if (f.has_header) cfg.has_header = true;
  if (f.raw_units) cfg.report_raw_units = true;
  return cfg;
}

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--out", f.out, "run directory");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--data", f.data, "input CSV path");
  cmd->add_option("--target", f.target, "forecast target column name");
  cmd->add_option("--window-length", f.window_length, "sliding window length");
  cmd->add_option("--train-fraction", f.train_fraction, "train split fraction [0.2, 0.8]");
  cmd->add_option("--method", f.method,
                  "selection method: none|filter|wrapper|embedded|autoencoder");
  cmd->add_option("--k", f.k, "number of features to keep");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--learning-rate", f.learning_rate, "Adam learning rate");
  cmd->add_flag("--force", f.force, "overwrite existing run artifacts");
  cmd->add_flag("--nsl-kdd", f.nsl_kdd, "input uses the bundled NSL-KDD column layout");
  cmd->add_flag("--has-header", f.has_header, "first input line is a header row");
  cmd->add_flag("--raw-units", f.raw_units, "also report metrics in raw target units");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowcast: hybrid recurrent flow forecasting and anomaly detection"};
  app.require_subcommand(1);

  FlagOverrides f;
  std::string detect_input = "-";
  bool gradcheck_corrupt = false;

  CLI::App* prep = app.add_subcommand("prep", "ingest, encode, normalize, window, split");
  CLI::App* select = app.add_subcommand("select", "rank and choose features");
  CLI::App* train = app.add_subcommand("train", "train the hybrid network");
  CLI::App* eval = app.add_subcommand("eval", "metrics for the hybrid model and baseline");
  CLI::App* detect = app.add_subcommand("detect", "stream records and emit anomaly verdicts");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  CLI::App* sweep = app.add_subcommand("sweep", "run every selection method and tabulate");

  for (CLI::App* cmd : {prep, select, train, eval, detect, gradcheck, sweep})
    add_common_flags(cmd, f);
  detect->add_option("--input", detect_input, "record source: file path or '-' for stdin");
  gradcheck->add_flag("--corrupt", gradcheck_corrupt,
                      "corrupt one gradient tensor to prove the check trips");

  CLI11_PARSE(app, argc, argv);

  try {
    const flowcast::cli::RunConfig cfg = resolve(f);
    if (prep->parsed()) {
      flowcast::cli::cmd_prep(cfg);
    } else if (select->parsed()) {
      flowcast::cli::cmd_select(cfg);
    } else if (train->parsed()) {
      flowcast::cli::cmd_train(cfg);
    } else if (eval->parsed()) {
      flowcast::cli::cmd_eval(cfg);
    } else if (detect->parsed()) {
      flowcast::cli::cmd_detect(cfg, detect_input, std::cout, std::cerr);
    } else if (gradcheck->parsed()) {
      const double err = flowcast::cli::cmd_gradcheck(cfg, gradcheck_corrupt, std::cout);
      return err < 1e-4 ? 0 : 3;
    } else if (sweep->parsed()) {
      flowcast::cli::cmd_sweep(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return flowcast::cli::exit_code_for(e);
  }
  return 0;
}
