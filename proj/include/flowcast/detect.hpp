// detect: MAE/RMSE evaluation, residual thresholding on training errors, and
// batch/streaming anomaly verdicts. The streaming path reproduces the batch
// path verdict-for-verdict on a replayed file.
#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/dataio.hpp"
#include "flowcast/nn.hpp"

namespace flowcast::detect {

double mae(const Vec& predictions, const Vec& targets);
double rmse(const Vec& predictions, const Vec& targets);

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  long sample_count = 0;
};

std::string to_json(const MetricsReport& m);

// One forward pass per sample, in ascending order; parallel over samples.
Vec predict_all(const nn::HybridNetwork& net, const dataio::WindowedDataset& ds);
Vec predict_all_serial(const nn::HybridNetwork& net, const dataio::WindowedDataset& ds);

MetricsReport evaluate(const nn::HybridNetwork& net, const dataio::WindowedDataset& ds);

// Naive forecaster: next value = the target feature at the window's last row.
MetricsReport persistence_baseline(const dataio::WindowedDataset& ds);

struct ThresholdModel {
  double error_mean = 0.0;
  double error_std = 0.0;  // population std
  double k_sigma = 3.0;
  double threshold() const { return error_mean + k_sigma * error_std; }
};

ThresholdModel fit_threshold(const Vec& training_abs_errors, double k_sigma = 3.0);
std::string to_json(const ThresholdModel& t);
ThresholdModel threshold_from_json(const std::string& text);

struct AnomalyVerdict {
  long step = 0;  // index of the predicted record
  double predicted = 0.0;
  double actual = 0.0;
  double abs_error = 0.0;
  bool is_anomaly = false;
  long latency_micros = 0;
};

std::string to_json(const AnomalyVerdict& v, double threshold);

std::vector<AnomalyVerdict> detect_batch(const nn::HybridNetwork& net,
                                         const ThresholdModel& threshold,
                                         const dataio::WindowedDataset& ds);

struct StreamResult {
  std::optional<AnomalyVerdict> verdict;
  std::optional<std::string> error;  // malformed record; the stream continues
};

// Online windowing over raw records: encode -> normalize -> slice selected
// features -> ring buffer. Once the buffer holds L rows, each incoming
// record's target is predicted from the previous L rows.
class StreamState {
 public:
  StreamState(dataio::EncodingSpec encoding, dataio::NormalizationParams normalization,
              std::vector<int> selected_features, const nn::HybridNetwork& net,
              int window_length);

  StreamResult consume(const std::string& csv_line, const ThresholdModel& threshold);
  long records_seen() const { return step_; }

 private:
  dataio::EncodingSpec encoding_;
  dataio::NormalizationParams normalization_;
  std::vector<int> selected_;
  const nn::HybridNetwork& net_;
  int window_length_;
  int target_feature_;  // index into the full encoded feature vector
  std::deque<Vec> buffer_;
  long step_ = 0;
};

}  // namespace flowcast::detect
