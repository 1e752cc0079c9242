#include "flowcast/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "flowcast/detect.hpp"
#include "flowcast/featsel.hpp"

namespace flowcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMethods = {"none", "filter", "wrapper", "embedded",
                                           "autoencoder"};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write file: " + path);
  f << content;
}

std::string run_path(const RunConfig& cfg, const char* name) {
  return (fs::path(cfg.out_dir) / name).string();
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void validate_common(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) throw ConfigError("output directory is required");
  if (cfg.target.empty()) throw ConfigError("target column name is required");
  if (cfg.window_length < 1) throw ConfigError("window_length must be >= 1");
  if (cfg.train_fraction < 0.2 || cfg.train_fraction > 0.8)
    throw ConfigError("train_fraction must lie in [0.2, 0.8]");
  if (cfg.selection.k < 1) throw ConfigError("selection k must be >= 1");
  if (std::find(kMethods.begin(), kMethods.end(), cfg.selection.method) == kMethods.end())
    throw ConfigError("unknown selection method: " + cfg.selection.method);
  if (cfg.arch.indrnn_widths.empty()) throw ConfigError("architecture needs >= 1 IndRNN layer");
  for (int w : cfg.arch.indrnn_widths)
    if (w < 1) throw ConfigError("IndRNN widths must be positive");
  if (cfg.arch.lstm_width < 1) throw ConfigError("lstm_width must be positive");
  nn::activation_from_name(cfg.arch.activation);  // throws on unknown names
  if (!(cfg.threshold_k_sigma > 0.0)) throw ConfigError("threshold_k_sigma must be positive");
  if (cfg.train_cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.train_cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.train_cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (cfg.train_cfg.validation_fraction < 0.0 || cfg.train_cfg.validation_fraction > 0.5)
    throw ConfigError("validation_fraction must lie in [0, 0.5]");
}

// Run directories are append-only; a rerun needs a fresh directory or --force.
void ensure_fresh(const RunConfig& cfg, std::initializer_list<const char*> names) {
  if (cfg.overwrite) return;
  for (const char* name : names) {
    const std::string p = run_path(cfg, name);
    if (fs::exists(p))
      throw ConfigError("artifact already exists: " + p +
                        " (use --force or a new output directory)");
  }
}

void update_manifest(const RunConfig& cfg, const std::string& command,
                     const std::vector<std::string>& artifacts,
                     const std::string& input_checksum = "") {
  const std::string path = run_path(cfg, artifact::kManifest);
  json j;
  if (fs::exists(path)) j = json::parse(read_file(path));
  j["version"] = "0.1.0";
  j["config"] = json::parse(to_json(cfg));
  if (!input_checksum.empty()) j["input_checksum"] = input_checksum;
  json arts = j.value("artifacts", json::array());
  for (const std::string& a : artifacts) {
    bool present = false;
    for (const auto& e : arts) present = present || e.get<std::string>() == a;
    if (!present) arts.push_back(a);
  }
  j["artifacts"] = std::move(arts);
  json cmds = j.value("commands", json::array());
  cmds.push_back({{"name", command}, {"completed_utc", utc_now()}});
  j["commands"] = std::move(cmds);
  write_file(path, j.dump(2) + "\n");
  write_file(run_path(cfg, artifact::kConfig), to_json(cfg));
}

dataio::PreparedSeries load_prepared(const RunConfig& cfg) {
  const std::string path = run_path(cfg, artifact::kPrepared);
  if (!fs::exists(path))
    throw ConfigError("missing " + path + " — run the prep command first");
  return dataio::read_prepared(path);
}

featsel::SelectionReport all_features_report(int f_count) {
  featsel::SelectionReport r;
  r.method = "none";
  r.k = f_count;
  r.scores.assign(f_count, 0.0);
  r.selected.resize(f_count);
  for (int f = 0; f < f_count; ++f) r.selected[f] = f;
  return r;
}

featsel::SelectionReport load_selection_or_all(const RunConfig& cfg, int f_count) {
  const std::string path = run_path(cfg, artifact::kSelection);
  if (!fs::exists(path)) return all_features_report(f_count);
  featsel::SelectionReport r = featsel::selection_from_json(read_file(path));
  for (int f : r.selected)
    if (f < 0 || f >= f_count)
      throw DataError("selection index " + std::to_string(f) + " out of range for " +
                      std::to_string(f_count) + " features");
  return r;
}

dataio::FeatureMatrix slice_features(const dataio::PreparedSeries& prepared,
                                     const std::vector<int>& selected) {
  dataio::FeatureMatrix out;
  out.values = Mat(prepared.rows.rows, static_cast<int>(selected.size()));
  out.target_index = -1;
  for (size_t i = 0; i < selected.size(); ++i) {
    out.feature_names.push_back(prepared.feature_names[selected[i]]);
    if (selected[i] == prepared.target_index) out.target_index = static_cast<int>(i);
  }
  if (out.target_index < 0)
    throw DataError("selection does not include the target feature");
  for (int r = 0; r < prepared.rows.rows; ++r)
    for (size_t i = 0; i < selected.size(); ++i)
      out.values.at(r, static_cast<int>(i)) = prepared.rows.at(r, selected[i]);
  return out;
}

std::pair<dataio::WindowedDataset, dataio::WindowedDataset> build_splits(
    const dataio::PreparedSeries& prepared, const std::vector<int>& selected) {
  const dataio::FeatureMatrix sliced = slice_features(prepared, selected);
  const dataio::WindowedDataset ds = dataio::make_windows(sliced, prepared.window_length);
  return dataio::split_chronological(ds, dataio::SplitSpec{prepared.train_fraction});
}

// Supervised pairs for the selectors: X = training-visible rows except the
// last, y = next-step target.
std::pair<Mat, Vec> selection_training_data(const dataio::PreparedSeries& prepared) {
  const int visible = dataio::training_visible_rows(prepared.rows.rows, prepared.window_length,
                                                    prepared.train_fraction);
  if (visible < 2) throw DataError("not enough training rows for feature selection");
  Mat x(visible - 1, prepared.rows.cols);
  Vec y(visible - 1);
  for (int r = 0; r + 1 < visible; ++r) {
    std::copy(prepared.rows.row(r), prepared.rows.row(r) + prepared.rows.cols, x.row(r));
    y[r] = prepared.rows.at(r + 1, prepared.target_index);
  }
  return {std::move(x), std::move(y)};
}

nn::Architecture resolved_architecture(const RunConfig& cfg, int input_size) {
  nn::Architecture arch;
  arch.input_size = input_size;
  arch.indrnn_widths = cfg.arch.indrnn_widths;
  arch.lstm_width = cfg.arch.lstm_width;
  arch.activation = nn::activation_from_name(cfg.arch.activation);
  arch.candidate_tanh = cfg.arch.candidate_tanh;
  arch.u_max = std::pow(2.0, 1.0 / cfg.window_length);
  return arch;
}

void write_checkpoint(const RunConfig& cfg, const nn::HybridNetwork& net,
                      train::AdamState& state) {
  json j;
  j["format"] = "flowcast-checkpoint";
  j["version"] = 1;
  j["network"] = json::parse(nn::to_json(net));
  json m = json::object(), v = json::object();
  for (const nn::TensorRef& r : train::tensor_refs(state.m))
    m[r.name] = std::vector<double>(r.data, r.data + r.size);
  for (const nn::TensorRef& r : train::tensor_refs(state.v))
    v[r.name] = std::vector<double>(r.data, r.data + r.size);
  j["optimizer"] = {{"step", state.step}, {"m", std::move(m)}, {"v", std::move(v)}};
  write_file(run_path(cfg, artifact::kCheckpoint), j.dump(2) + "\n");
}

nn::HybridNetwork load_checkpoint(const RunConfig& cfg) {
  const std::string path = run_path(cfg, artifact::kCheckpoint);
  if (!fs::exists(path))
    throw ConfigError("missing " + path + " — run the train command first");
  const json j = json::parse(read_file(path));
  if (j.value("format", "") != std::string("flowcast-checkpoint"))
    throw DataError("not a flowcast checkpoint: " + path);
  return nn::network_from_json(j.at("network").dump());
}

detect::MetricsReport metrics_from(const Vec& preds, const Vec& targets) {
  return detect::MetricsReport{detect::mae(preds, targets), detect::rmse(preds, targets),
                               static_cast<long>(preds.size())};
}

json metrics_json(const detect::MetricsReport& m) {
  return json{{"mae", m.mae}, {"rmse", m.rmse}, {"n", m.sample_count}};
}

}  // namespace

RunConfig config_from_json_file(const std::string& path) {
  RunConfig cfg;
  const json j = json::parse(read_file(path));

  const std::vector<std::string> known = {
      "data",         "has_header", "nsl_kdd",           "target",
      "window_length", "train_fraction", "selection",    "architecture",
      "train",        "threshold_k_sigma", "seed",       "out",
      "overwrite",    "report_raw_units"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key: " + key);
  }

  cfg.data_path = j.value("data", cfg.data_path);
  cfg.has_header = j.value("has_header", cfg.has_header);
  cfg.nsl_kdd = j.value("nsl_kdd", cfg.nsl_kdd);
  cfg.target = j.value("target", cfg.target);
  cfg.window_length = j.value("window_length", cfg.window_length);
  cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
  if (j.contains("selection")) {
    const json& s = j.at("selection");
    cfg.selection.method = s.value("method", cfg.selection.method);
    cfg.selection.k = s.value("k", cfg.selection.k);
  }
  if (j.contains("architecture")) {
    const json& a = j.at("architecture");
    if (a.contains("indrnn_widths"))
      cfg.arch.indrnn_widths = a.at("indrnn_widths").get<std::vector<int>>();
    cfg.arch.lstm_width = a.value("lstm_width", cfg.arch.lstm_width);
    cfg.arch.activation = a.value("activation", cfg.arch.activation);
    cfg.arch.candidate_tanh = a.value("candidate_tanh", cfg.arch.candidate_tanh);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    cfg.train_cfg.epochs = t.value("epochs", cfg.train_cfg.epochs);
    cfg.train_cfg.batch_size = t.value("batch_size", cfg.train_cfg.batch_size);
    cfg.train_cfg.learning_rate = t.value("learning_rate", cfg.train_cfg.learning_rate);
    cfg.train_cfg.adam_beta1 = t.value("adam_beta1", cfg.train_cfg.adam_beta1);
    cfg.train_cfg.adam_beta2 = t.value("adam_beta2", cfg.train_cfg.adam_beta2);
    cfg.train_cfg.adam_epsilon = t.value("adam_epsilon", cfg.train_cfg.adam_epsilon);
    cfg.train_cfg.grad_clip_norm = t.value("grad_clip_norm", cfg.train_cfg.grad_clip_norm);
    cfg.train_cfg.validation_fraction =
        t.value("validation_fraction", cfg.train_cfg.validation_fraction);
  }
  cfg.threshold_k_sigma = j.value("threshold_k_sigma", cfg.threshold_k_sigma);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.overwrite = j.value("overwrite", cfg.overwrite);
  cfg.report_raw_units = j.value("report_raw_units", cfg.report_raw_units);
  return cfg;
}

std::string to_json(const RunConfig& cfg) {
  json j;
  j["data"] = cfg.data_path;
  j["has_header"] = cfg.has_header;
  j["nsl_kdd"] = cfg.nsl_kdd;
  j["target"] = cfg.target;
  j["window_length"] = cfg.window_length;
  j["train_fraction"] = cfg.train_fraction;
  j["selection"] = {{"method", cfg.selection.method}, {"k", cfg.selection.k}};
  j["architecture"] = {{"indrnn_widths", cfg.arch.indrnn_widths},
                       {"lstm_width", cfg.arch.lstm_width},
                       {"activation", cfg.arch.activation},
                       {"candidate_tanh", cfg.arch.candidate_tanh}};
  j["train"] = {{"epochs", cfg.train_cfg.epochs},
                {"batch_size", cfg.train_cfg.batch_size},
                {"learning_rate", cfg.train_cfg.learning_rate},
                {"adam_beta1", cfg.train_cfg.adam_beta1},
                {"adam_beta2", cfg.train_cfg.adam_beta2},
                {"adam_epsilon", cfg.train_cfg.adam_epsilon},
                {"grad_clip_norm", cfg.train_cfg.grad_clip_norm},
                {"validation_fraction", cfg.train_cfg.validation_fraction}};
  j["threshold_k_sigma"] = cfg.threshold_k_sigma;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  j["overwrite"] = cfg.overwrite;
  j["report_raw_units"] = cfg.report_raw_units;
  return j.dump(2) + "\n";
}

void cmd_prep(const RunConfig& cfg) {
  validate_common(cfg);
  if (cfg.data_path.empty()) throw ConfigError("data path is required");

  fs::create_directories(cfg.out_dir);
  ensure_fresh(cfg, {artifact::kEncoding, artifact::kNormalization, artifact::kPrepared});

  dataio::RawTable table = dataio::load_csv(cfg.data_path, cfg.has_header);
  std::set<int> excluded;
  if (cfg.nsl_kdd) {
    const auto& names = dataio::nsl_kdd_column_names();
    if (table.col_count() != static_cast<int>(names.size()))
      throw DataError("NSL-KDD layout expects " + std::to_string(names.size()) +
                      " columns, file has " + std::to_string(table.col_count()));
    if (!cfg.has_header) table.column_names = names;
    excluded.insert(41);  // label
    excluded.insert(42);  // difficulty
  }

  int target_col = -1;
  for (int c = 0; c < table.col_count(); ++c)
    if (table.column_names[c] == cfg.target) target_col = c;
  if (target_col < 0) throw ConfigError("target column '" + cfg.target + "' not found");

  const dataio::EncodingSpec spec = dataio::fit_encoding(table, target_col, excluded);
  const dataio::FeatureMatrix matrix = dataio::apply_encoding(table, spec);

  const int total = matrix.values.rows;
  const int samples = total - cfg.window_length;
  if (samples < 2)
    throw DataError("need at least window_length + 2 rows, got " + std::to_string(total));
  const int n_train = static_cast<int>(std::floor(cfg.train_fraction * samples));
  if (n_train < 1 || n_train >= samples)
    throw DataError("train/test split infeasible for " + std::to_string(samples) + " windows");

  const int visible =
      dataio::training_visible_rows(total, cfg.window_length, cfg.train_fraction);
  dataio::FeatureMatrix head = matrix;
  head.values = Mat(visible, matrix.values.cols);
  std::copy(matrix.values.row(0), matrix.values.row(0) + static_cast<size_t>(visible) * matrix.values.cols,
            head.values.a.begin());
  const dataio::NormalizationParams norm = dataio::fit_normalizer(head);
  const dataio::FeatureMatrix normalized = dataio::apply_normalizer(matrix, norm);

  dataio::PreparedSeries prepared;
  prepared.rows = normalized.values;
  prepared.feature_names = normalized.feature_names;
  prepared.target_index = normalized.target_index;
  prepared.window_length = cfg.window_length;
  prepared.train_fraction = cfg.train_fraction;

  write_file(run_path(cfg, artifact::kEncoding), dataio::to_json(spec));
  write_file(run_path(cfg, artifact::kNormalization), dataio::to_json(norm));
  dataio::write_prepared(run_path(cfg, artifact::kPrepared), prepared);

  const std::string bytes = read_file(cfg.data_path);
  char checksum[32];
  std::snprintf(checksum, sizeof checksum, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  update_manifest(cfg, "prep",
                  {artifact::kEncoding, artifact::kNormalization, artifact::kPrepared},
                  checksum);
}

void cmd_select(const RunConfig& cfg) {
  validate_common(cfg);
  const dataio::PreparedSeries prepared = load_prepared(cfg);
  ensure_fresh(cfg, {artifact::kSelection});

  const int f_count = prepared.rows.cols;
  featsel::SelectionReport report;
  if (cfg.selection.method == "none") {
    report = all_features_report(f_count);
  } else {
    const auto [x, y] = selection_training_data(prepared);
    const int k = cfg.selection.k;
    if (cfg.selection.method == "filter") {
      report = featsel::filter_select(x, y, k, prepared.target_index);
    } else if (cfg.selection.method == "wrapper") {
      report = featsel::wrapper_select(x, y, k, prepared.target_index);
    } else if (cfg.selection.method == "embedded") {
      featsel::ForestConfig forest_cfg;
      forest_cfg.seed = cfg.seed;
      report = featsel::embedded_select(x, y, k, prepared.target_index, forest_cfg);
    } else {
      featsel::AutoencoderConfig ae_cfg;
      ae_cfg.seed = cfg.seed;
      report = featsel::autoencoder_select(x, k, prepared.target_index, ae_cfg);
    }
  }

  write_file(run_path(cfg, artifact::kSelection), featsel::to_json(report));
  update_manifest(cfg, "select", {artifact::kSelection});
}

void cmd_train(const RunConfig& cfg) {
  validate_common(cfg);
  const dataio::PreparedSeries prepared = load_prepared(cfg);
  const featsel::SelectionReport selection = load_selection_or_all(cfg, prepared.rows.cols);
  ensure_fresh(cfg, {artifact::kCheckpoint, artifact::kLossCsv, artifact::kThreshold});

  const auto [train_ds, test_ds] = build_splits(prepared, selection.selected);

  nn::HybridNetwork net = init_network(
      resolved_architecture(cfg, static_cast<int>(selection.selected.size())), cfg.seed);
  train::TrainConfig tcfg = cfg.train_cfg;
  tcfg.seed = cfg.seed;

  train::AdamState state = train::init_adam(net);
  const train::TrainReport report = train::train(net, train_ds, tcfg, &state);
  train::write_loss_csv(run_path(cfg, artifact::kLossCsv), report);
  write_checkpoint(cfg, net, state);

  const Vec preds = detect::predict_all(net, train_ds);
  Vec abs_errors(preds.size());
  for (size_t s = 0; s < preds.size(); ++s)
    abs_errors[s] = std::abs(preds[s] - train_ds.target(static_cast<int>(s)));
  const detect::ThresholdModel threshold =
      detect::fit_threshold(abs_errors, cfg.threshold_k_sigma);
  write_file(run_path(cfg, artifact::kThreshold), detect::to_json(threshold));

  update_manifest(cfg, "train",
                  {artifact::kCheckpoint, artifact::kLossCsv, artifact::kThreshold});
}

void cmd_eval(const RunConfig& cfg) {
  validate_common(cfg);
  const dataio::PreparedSeries prepared = load_prepared(cfg);
  const featsel::SelectionReport selection = load_selection_or_all(cfg, prepared.rows.cols);
  const nn::HybridNetwork net = load_checkpoint(cfg);
  ensure_fresh(cfg, {artifact::kMetrics});

  const auto [train_ds, test_ds] = build_splits(prepared, selection.selected);

  const Vec hybrid_preds = detect::predict_all(net, test_ds);
  Vec targets(test_ds.size()), persistence_preds(test_ds.size());
  for (int s = 0; s < test_ds.size(); ++s) {
    targets[s] = test_ds.target(s);
    persistence_preds[s] =
        test_ds.rows.at(s + test_ds.window_length - 1, test_ds.target_index);
  }

  json doc;
  doc["hybrid"] = metrics_json(metrics_from(hybrid_preds, targets));
  doc["persistence"] = metrics_json(metrics_from(persistence_preds, targets));

  if (cfg.report_raw_units) {
    const dataio::NormalizationParams norm =
        dataio::normalization_from_json(read_file(run_path(cfg, artifact::kNormalization)));
    auto denorm = [&](const Vec& v) {
      Vec out(v.size());
      for (size_t i = 0; i < v.size(); ++i)
        out[i] = dataio::denormalize_value(v[i], norm, prepared.target_index);
      return out;
    };
    const Vec raw_targets = denorm(targets);
    doc["hybrid_raw_units"] = metrics_json(metrics_from(denorm(hybrid_preds), raw_targets));
    doc["persistence_raw_units"] =
        metrics_json(metrics_from(denorm(persistence_preds), raw_targets));
  }

  write_file(run_path(cfg, artifact::kMetrics), doc.dump(2) + "\n");
  update_manifest(cfg, "eval", {artifact::kMetrics});
}

DetectSummary cmd_detect(const RunConfig& cfg, const std::string& input_path,
                         std::ostream& out, std::ostream& err) {
  validate_common(cfg);
  const dataio::EncodingSpec encoding =
      dataio::encoding_from_json(read_file(run_path(cfg, artifact::kEncoding)));
  const dataio::NormalizationParams norm =
      dataio::normalization_from_json(read_file(run_path(cfg, artifact::kNormalization)));
  const dataio::PreparedSeries prepared = load_prepared(cfg);
  const featsel::SelectionReport selection = load_selection_or_all(cfg, prepared.rows.cols);
  const nn::HybridNetwork net = load_checkpoint(cfg);
  const std::string threshold_path = run_path(cfg, artifact::kThreshold);
  if (!fs::exists(threshold_path))
    throw ConfigError("missing " + threshold_path + " — run the train command first");
  const detect::ThresholdModel threshold =
      detect::threshold_from_json(read_file(threshold_path));

  detect::StreamState state(encoding, norm, selection.selected, net,
                            prepared.window_length);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (input_path != "-") {
    file.open(input_path);
    if (!file) throw DataError("cannot open input: " + input_path);
    in = &file;
  }

  DetectSummary summary;
  std::vector<long> latencies;
  std::string line;
  bool first = true;
  while (std::getline(*in, line)) {
    std::string stripped = line;
    while (!stripped.empty() && (stripped.back() == '\r' || stripped.back() == ' '))
      stripped.pop_back();
    if (stripped.empty()) continue;
    if (first && cfg.has_header) {
      first = false;
      continue;
    }
    first = false;

    ++summary.records;
    const detect::StreamResult result = state.consume(stripped, threshold);
    if (result.error) {
      ++summary.errors;
      json e;
      e["step"] = state.records_seen() - 1;
      e["error"] = *result.error;
      err << e.dump() << '\n';
    }
    if (result.verdict) {
      ++summary.verdicts;
      if (result.verdict->is_anomaly) ++summary.anomalies;
      latencies.push_back(result.verdict->latency_micros);
      out << detect::to_json(*result.verdict, threshold.threshold()) << '\n';
    }
  }

  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    const size_t idx =
        static_cast<size_t>(std::ceil(0.99 * static_cast<double>(latencies.size()))) - 1;
    summary.p99_latency_micros = latencies[std::min(idx, latencies.size() - 1)];
  }

  json s;
  s["records"] = summary.records;
  s["verdicts"] = summary.verdicts;
  s["anomalies"] = summary.anomalies;
  s["errors"] = summary.errors;
  s["anomaly_rate"] =
      summary.verdicts > 0 ? static_cast<double>(summary.anomalies) / summary.verdicts : 0.0;
  s["p99_latency_micros"] = summary.p99_latency_micros;
  err << s.dump() << '\n';
  return summary;
}

double cmd_gradcheck(const RunConfig& cfg, bool corrupt_debug, std::ostream& out) {
  validate_common(cfg);

  const int input_size = 4;
  const nn::HybridNetwork net =
      init_network(resolved_architecture(cfg, input_size), cfg.seed);

  Rng rng(derive_seed(cfg.seed, 0x6c));
  Mat window(cfg.window_length, input_size);
  for (double& v : window.a) v = rng.uniform(-1.0, 1.0);
  const double target = rng.uniform(-1.0, 1.0);

  const train::GradCheckResult result =
      train::grad_check(net, view_of(window), target, 1e-5, corrupt_debug ? 0 : -1);

  std::string worst_name;
  double worst = -1.0;
  for (const auto& [name, rel] : result.per_tensor) {
    out << name << "  max_rel_error=" << fmt_double(rel) << '\n';
    if (rel > worst) {
      worst = rel;
      worst_name = name;
    }
  }
  out << "worst tensor: " << worst_name << " (" << fmt_double(worst) << ")\n";
  out << "max relative error: " << fmt_double(result.max_rel_error)
      << (result.max_rel_error < 1e-4 ? "  [ok]" : "  [FAIL > 1e-4]") << '\n';
  return result.max_rel_error;
}

void cmd_sweep(const RunConfig& cfg) {
  validate_common(cfg);
  if (cfg.data_path.empty()) throw ConfigError("data path is required");
  fs::create_directories(cfg.out_dir);
  ensure_fresh(cfg, {artifact::kSweepCsv});

  struct Row {
    std::string model, method;
    double mae, rmse;
  };
  std::vector<Row> hybrid_rows, persistence_rows;

  for (const std::string& method : kMethods) {
    RunConfig sub = cfg;
    sub.out_dir = (fs::path(cfg.out_dir) / ("sweep_" + method)).string();
    sub.selection.method = method;
    cmd_prep(sub);
    cmd_select(sub);
    cmd_train(sub);
    cmd_eval(sub);

    const json metrics = json::parse(read_file(run_path(sub, artifact::kMetrics)));
    hybrid_rows.push_back({"hybrid", method, metrics.at("hybrid").at("mae").get<double>(),
                           metrics.at("hybrid").at("rmse").get<double>()});
    persistence_rows.push_back({"persistence", method,
                                metrics.at("persistence").at("mae").get<double>(),
                                metrics.at("persistence").at("rmse").get<double>()});
  }

  std::ostringstream csv;
  csv << "model,selection,mae,rmse\n";
  for (const auto& rows : {hybrid_rows, persistence_rows})
    for (const Row& r : rows)
      csv << r.model << ',' << r.method << ',' << fmt_double(r.mae) << ','
          << fmt_double(r.rmse) << '\n';
  write_file(run_path(cfg, artifact::kSweepCsv), csv.str());
  update_manifest(cfg, "sweep", {artifact::kSweepCsv});
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  return 1;
}

}  // namespace flowcast::cli
