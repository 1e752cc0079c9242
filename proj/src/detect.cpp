#include "flowcast/detect.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

namespace flowcast::detect {

using nlohmann::json;

namespace {

void check_metric_inputs(const Vec& predictions, const Vec& targets) {
  if (predictions.size() != targets.size())
    throw DataError("metrics: length mismatch (" + std::to_string(predictions.size()) + " vs " +
                    std::to_string(targets.size()) + ")");
  if (predictions.empty()) throw DataError("metrics: empty input");
}

}  // namespace

double mae(const Vec& predictions, const Vec& targets) {
  check_metric_inputs(predictions, targets);
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - targets[i]);
  return sum / static_cast<double>(predictions.size());
}

double rmse(const Vec& predictions, const Vec& targets) {
  check_metric_inputs(predictions, targets);
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

std::string to_json(const MetricsReport& m) {
  json j;
  j["mae"] = m.mae;
  j["rmse"] = m.rmse;
  j["n"] = m.sample_count;
  return j.dump(2) + "\n";
}

Vec predict_all(const nn::HybridNetwork& net, const dataio::WindowedDataset& ds) {
  const int n = ds.size();
  Vec preds(n, 0.0);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n; ++s) preds[s] = nn::network_forward(net, ds.window(s));
  return preds;
}

Vec predict_all_serial(const nn::HybridNetwork& net, const dataio::WindowedDataset& ds) {
  const int n = ds.size();
  Vec preds(n, 0.0);
  for (int s = 0; s < n; ++s) preds[s] = nn::network_forward(net, ds.window(s));
  return preds;
}

MetricsReport evaluate(const nn::HybridNetwork& net, const dataio::WindowedDataset& ds) {
  if (ds.size() == 0) throw DataError("evaluate: empty dataset");
  const Vec preds = predict_all(net, ds);
  Vec targets(ds.size());
  for (int s = 0; s < ds.size(); ++s) targets[s] = ds.target(s);
  return MetricsReport{mae(preds, targets), rmse(preds, targets), ds.size()};
}

MetricsReport persistence_baseline(const dataio::WindowedDataset& ds) {
  if (ds.size() == 0) throw DataError("persistence_baseline: empty dataset");
  Vec preds(ds.size()), targets(ds.size());
  for (int s = 0; s < ds.size(); ++s) {
    preds[s] = ds.rows.at(s + ds.window_length - 1, ds.target_index);
    targets[s] = ds.target(s);
  }
  return MetricsReport{mae(preds, targets), rmse(preds, targets), ds.size()};
}

ThresholdModel fit_threshold(const Vec& training_abs_errors, double k_sigma) {
  if (training_abs_errors.size() < 2)
    throw DataError("fit_threshold: need at least 2 errors, got " +
                    std::to_string(training_abs_errors.size()));
  if (!(k_sigma > 0.0)) throw ConfigError("fit_threshold: k_sigma must be positive");

  double mean = 0.0;
  for (double e : training_abs_errors) mean += e;
  mean /= static_cast<double>(training_abs_errors.size());
  double var = 0.0;
  for (double e : training_abs_errors) var += (e - mean) * (e - mean);
  var /= static_cast<double>(training_abs_errors.size());
  return ThresholdModel{mean, std::sqrt(var), k_sigma};
}

std::string to_json(const ThresholdModel& t) {
  json j;
  j["error_mean"] = t.error_mean;
  j["error_std"] = t.error_std;
  j["k_sigma"] = t.k_sigma;
  j["threshold"] = t.threshold();
  return j.dump(2) + "\n";
}

ThresholdModel threshold_from_json(const std::string& text) {
  const json j = json::parse(text);
  ThresholdModel t;
  t.error_mean = j.at("error_mean").get<double>();
  t.error_std = j.at("error_std").get<double>();
  t.k_sigma = j.at("k_sigma").get<double>();
  return t;
}

std::string to_json(const AnomalyVerdict& v, double threshold) {
  json j;
  j["step"] = v.step;
  j["predicted"] = v.predicted;
  j["actual"] = v.actual;
  j["abs_error"] = v.abs_error;
  j["threshold"] = threshold;
  j["is_anomaly"] = v.is_anomaly;
  j["latency_micros"] = v.latency_micros;
  return j.dump();
}

std::vector<AnomalyVerdict> detect_batch(const nn::HybridNetwork& net,
                                         const ThresholdModel& threshold,
                                         const dataio::WindowedDataset& ds) {
  if (ds.size() == 0) throw DataError("detect_batch: empty dataset");
  const double tau = threshold.threshold();
  std::vector<AnomalyVerdict> verdicts(ds.size());
#pragma omp parallel for schedule(static)
  for (int s = 0; s < ds.size(); ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const double pred = nn::network_forward(net, ds.window(s));
    const double actual = ds.target(s);
    const double err = std::abs(pred - actual);
    const auto t1 = std::chrono::steady_clock::now();
    verdicts[s] = AnomalyVerdict{
        s + ds.window_length, pred, actual, err, err > tau,
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count()};
  }
  return verdicts;
}

StreamState::StreamState(dataio::EncodingSpec encoding,
                         dataio::NormalizationParams normalization,
                         std::vector<int> selected_features, const nn::HybridNetwork& net,
                         int window_length)
    : encoding_(std::move(encoding)),
      normalization_(std::move(normalization)),
      selected_(std::move(selected_features)),
      net_(net),
      window_length_(window_length) {
  if (window_length_ < 1) throw ConfigError("stream: window length must be >= 1");
  if (static_cast<int>(selected_.size()) != net_.input_size())
    throw ConfigError("stream: selected feature count != network input size");
  target_feature_ = encoding_.target_feature_index();
}

StreamResult StreamState::consume(const std::string& csv_line, const ThresholdModel& threshold) {
  const long this_step = step_++;
  const auto t0 = std::chrono::steady_clock::now();

  Vec full;
  try {
    const std::vector<dataio::Cell> cells = dataio::parse_csv_cells(csv_line);
    full = dataio::encode_row(cells, encoding_, this_step + 1);
  } catch (const DataError& e) {
    return StreamResult{std::nullopt, std::string(e.what())};
  }
  for (size_t f = 0; f < full.size(); ++f)
    full[f] = dataio::normalize_value(full[f], normalization_, static_cast<int>(f));

  const double actual = full[target_feature_];
  Vec sliced(selected_.size());
  for (size_t i = 0; i < selected_.size(); ++i) sliced[i] = full[selected_[i]];

  StreamResult result;
  if (static_cast<int>(buffer_.size()) == window_length_) {
    Mat window(window_length_, static_cast<int>(sliced.size()));
    for (int t = 0; t < window_length_; ++t)
      std::copy(buffer_[t].begin(), buffer_[t].end(), window.row(t));
    const double pred = nn::network_forward(net_, view_of(window));
    const double err = std::abs(pred - actual);
    const auto t1 = std::chrono::steady_clock::now();
    result.verdict = AnomalyVerdict{
        this_step, pred, actual, err, err > threshold.threshold(),
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count()};
  }

  buffer_.push_back(std::move(sliced));
  if (static_cast<int>(buffer_.size()) > window_length_) buffer_.pop_front();
  return result;
}

}  // namespace flowcast::detect
