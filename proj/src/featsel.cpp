#include "flowcast/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace flowcast::featsel {

using nlohmann::json;

std::string to_json(const SelectionReport& r) {
  json j;
  j["method"] = r.method;
  j["k"] = r.k;
  j["scores"] = r.scores;
  j["selected"] = r.selected;
  return j.dump(2) + "\n";
}

SelectionReport selection_from_json(const std::string& text) {
  const json j = json::parse(text);
  SelectionReport r;
  r.method = j.at("method").get<std::string>();
  r.k = j.at("k").get<int>();
  r.scores = j.at("scores").get<Vec>();
  r.selected = j.at("selected").get<std::vector<int>>();
  return r;
}

std::vector<int> finalize_selection(const Vec& scores, int k, int target_index) {
  const int f_count = static_cast<int>(scores.size());
  if (k < 1) throw ConfigError("selection k must be >= 1");
  if (k > f_count)
    throw ConfigError("selection k = " + std::to_string(k) + " exceeds feature count " +
                      std::to_string(f_count));
  if (target_index < 0 || target_index >= f_count)
    throw ConfigError("target index out of range");

  std::vector<int> order(f_count);
  std::iota(order.begin(), order.end(), 0);
  const auto by_rank = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::sort(order.begin(), order.end(), by_rank);

  std::vector<int> selected(order.begin(), order.begin() + k);
  if (std::find(selected.begin(), selected.end(), target_index) == selected.end()) {
    selected.back() = target_index;  // the model must see its own history
    std::sort(selected.begin(), selected.end(), by_rank);
  }
  return selected;
}

namespace {

void check_supervised_inputs(const Mat& x, const Vec& y, int min_rows) {
  if (x.rows != static_cast<int>(y.size()))
    throw DataError("feature rows (" + std::to_string(x.rows) + ") != target length (" +
                    std::to_string(y.size()) + ")");
  if (x.rows < min_rows)
    throw DataError("need at least " + std::to_string(min_rows) + " rows, got " +
                    std::to_string(x.rows));
}

}  // namespace

SelectionReport filter_select(const Mat& x, const Vec& y, int k, int target_index) {
  check_supervised_inputs(x, y, 3);
  const int rows = x.rows, f_count = x.cols;

  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= rows;
  double y_ss = 0.0;
  for (double v : y) y_ss += (v - y_mean) * (v - y_mean);

  Vec scores(f_count, 0.0);
  for (int f = 0; f < f_count; ++f) {
    double x_mean = 0.0;
    for (int r = 0; r < rows; ++r) x_mean += x.at(r, f);
    x_mean /= rows;
    double x_ss = 0.0, cross = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double dx = x.at(r, f) - x_mean;
      x_ss += dx * dx;
      cross += dx * (y[r] - y_mean);
    }
    if (x_ss == 0.0 || y_ss == 0.0) continue;  // zero variance scores 0
    scores[f] = std::abs(cross / std::sqrt(x_ss * y_ss));
  }

  SelectionReport report;
  report.method = "filter";
  report.k = k;
  report.scores = scores;
  report.selected = finalize_selection(scores, k, target_index);
  return report;
}

namespace {

// Solves G beta = rhs in place by Gaussian elimination with partial pivoting.
// Returns false when a pivot collapses (singular system).
bool solve_linear(Mat g, Vec rhs, Vec& beta) {
  const int d = g.rows;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);

  for (int col = 0; col < d; ++col) {
    int pivot = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(g.at(r, col)) > std::abs(g.at(pivot, col))) pivot = r;
    if (std::abs(g.at(pivot, col)) < 1e-12) return false;
    if (pivot != col) {
      for (int c = 0; c < d; ++c) std::swap(g.at(pivot, c), g.at(col, c));
      std::swap(rhs[pivot], rhs[col]);
    }
    for (int r = col + 1; r < d; ++r) {
      const double factor = g.at(r, col) / g.at(col, col);
      if (factor == 0.0) continue;
      for (int c = col; c < d; ++c) g.at(r, c) -= factor * g.at(col, c);
      rhs[r] -= factor * rhs[col];
    }
  }
  beta.assign(d, 0.0);
  for (int r = d - 1; r >= 0; --r) {
    double v = rhs[r];
    for (int c = r + 1; c < d; ++c) v -= g.at(r, c) * beta[c];
    beta[r] = v / g.at(r, r);
  }
  return true;
}

// Holdout MAE of an intercept + subset OLS proxy; falls back to a ridge-
// stabilized solve on singular normal equations. Never throws.
double proxy_holdout_mae(const Mat& x, const Vec& y, const std::vector<int>& subset,
                         int n_fit) {
  const int d = static_cast<int>(subset.size()) + 1;
  Mat g(d, d);
  Vec rhs(d, 0.0);
  Vec a(d, 1.0);
  for (int r = 0; r < n_fit; ++r) {
    for (size_t s = 0; s < subset.size(); ++s) a[s + 1] = x.at(r, subset[s]);
    for (int i = 0; i < d; ++i) {
      rhs[i] += a[i] * y[r];
      for (int j = 0; j < d; ++j) g.at(i, j) += a[i] * a[j];
    }
  }

  Vec beta;
  if (!solve_linear(g, rhs, beta)) {
    for (int i = 0; i < d; ++i) g.at(i, i) += 1e-8;
    if (!solve_linear(g, rhs, beta)) beta.assign(d, 0.0);
  }

  double abs_sum = 0.0;
  const int rows = x.rows;
  for (int r = n_fit; r < rows; ++r) {
    double pred = beta[0];
    for (size_t s = 0; s < subset.size(); ++s) pred += beta[s + 1] * x.at(r, subset[s]);
    abs_sum += std::abs(pred - y[r]);
  }
  return abs_sum / (rows - n_fit);
}

SelectionReport wrapper_impl(const Mat& x, const Vec& y, int k, int target_index,
                             const WrapperConfig& cfg, bool parallel) {
  check_supervised_inputs(x, y, 3);
  const int f_count = x.cols;
  if (k < 1 || k > f_count) throw ConfigError("selection k must lie in [1, F]");
  if (target_index < 0 || target_index >= f_count) throw ConfigError("target index out of range");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must lie in (0, 1)");

  const int n_fit = static_cast<int>(std::floor(x.rows * (1.0 - cfg.holdout_fraction)));
  if (n_fit < 1 || n_fit >= x.rows)
    throw DataError("holdout split leaves an empty side (" + std::to_string(x.rows) + " rows)");

  Vec scores(f_count, kUnrankedScore);
  std::vector<int> subset = {target_index};
  std::vector<char> in_subset(f_count, 0);
  in_subset[target_index] = 1;
  scores[target_index] = -proxy_holdout_mae(x, y, subset, n_fit);

  while (static_cast<int>(subset.size()) < k) {
    std::vector<int> candidates;
    for (int f = 0; f < f_count; ++f)
      if (!in_subset[f]) candidates.push_back(f);

    Vec maes(candidates.size(), 0.0);
    const int n_cand = static_cast<int>(candidates.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int ci = 0; ci < n_cand; ++ci) {
      std::vector<int> trial = subset;
      trial.push_back(candidates[ci]);
      maes[ci] = proxy_holdout_mae(x, y, trial, n_fit);
    }

    int best = 0;
    for (int ci = 1; ci < n_cand; ++ci)
      if (maes[ci] < maes[best]) best = ci;  // ties keep the lowest index

    subset.push_back(candidates[best]);
    in_subset[candidates[best]] = 1;
    scores[candidates[best]] = -maes[best];
  }

  SelectionReport report;
  report.method = "wrapper";
  report.k = k;
  report.scores = scores;
  report.selected = finalize_selection(scores, k, target_index);
  return report;
}

}  // namespace

SelectionReport wrapper_select(const Mat& x, const Vec& y, int k, int target_index,
                               const WrapperConfig& cfg) {
  return wrapper_impl(x, y, k, target_index, cfg, true);
}

SelectionReport wrapper_select_serial(const Mat& x, const Vec& y, int k, int target_index,
                                      const WrapperConfig& cfg) {
  return wrapper_impl(x, y, k, target_index, cfg, false);
}

AutoencoderModel fit_autoencoder(const Mat& x, const AutoencoderConfig& cfg) {
  const int rows = x.rows, f_count = x.cols;
  if (rows < 1) throw DataError("autoencoder: empty matrix");
  if (f_count < 2) throw ConfigError("autoencoder: need at least 2 features");
  const int hidden =
      cfg.hidden_width > 0 ? cfg.hidden_width : std::max(1, (f_count + 1) / 2);
  if (hidden >= f_count) throw ConfigError("autoencoder: hidden width must stay below F");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("autoencoder: learning rate must be positive");

  Rng rng(cfg.seed);
  AutoencoderModel model;
  model.enc_w = Mat(hidden, f_count);
  model.dec_w = Mat(f_count, hidden);
  const double s_enc = std::sqrt(6.0 / (f_count + hidden));
  for (double& w : model.enc_w.a) w = rng.uniform(-s_enc, s_enc);
  for (double& w : model.dec_w.a) w = rng.uniform(-s_enc, s_enc);
  model.enc_b.assign(hidden, 0.0);
  model.dec_b.assign(f_count, 0.0);

  const double denom = static_cast<double>(rows) * f_count;
  Vec z(hidden), xhat(f_count), dxhat(f_count), dz(hidden);
  Mat gw1(hidden, f_count), gw2(f_count, hidden);
  Vec gb1(hidden), gb2(f_count);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw1.a.begin(), gw1.a.end(), 0.0);
    std::fill(gw2.a.begin(), gw2.a.end(), 0.0);
    std::fill(gb1.begin(), gb1.end(), 0.0);
    std::fill(gb2.begin(), gb2.end(), 0.0);
    double loss = 0.0;

    for (int r = 0; r < rows; ++r) {
      const double* row = x.row(r);
      for (int h = 0; h < hidden; ++h) {
        double pre = model.enc_b[h];
        const double* w = model.enc_w.row(h);
        for (int f = 0; f < f_count; ++f) pre += w[f] * row[f];
        z[h] = 1.0 / (1.0 + std::exp(-pre));
      }
      for (int f = 0; f < f_count; ++f) {
        double v = model.dec_b[f];
        const double* w = model.dec_w.row(f);
        for (int h = 0; h < hidden; ++h) v += w[h] * z[h];
        xhat[f] = v;
        const double e = v - row[f];
        loss += e * e;
        dxhat[f] = 2.0 * e / denom;
      }
      std::fill(dz.begin(), dz.end(), 0.0);
      for (int f = 0; f < f_count; ++f) {
        gb2[f] += dxhat[f];
        double* gw = gw2.row(f);
        const double* w = model.dec_w.row(f);
        for (int h = 0; h < hidden; ++h) {
          gw[h] += dxhat[f] * z[h];
          dz[h] += w[h] * dxhat[f];
        }
      }
      for (int h = 0; h < hidden; ++h) {
        const double dpre = dz[h] * z[h] * (1.0 - z[h]);
        gb1[h] += dpre;
        double* gw = gw1.row(h);
        for (int f = 0; f < f_count; ++f) gw[f] += dpre * row[f];
      }
    }

    if (!std::isfinite(loss))
      throw NumericError("autoencoder: non-finite loss at epoch " + std::to_string(epoch) +
                         " (learning rate too high?)");
    for (size_t i = 0; i < model.enc_w.a.size(); ++i)
      model.enc_w.a[i] -= cfg.learning_rate * gw1.a[i];
    for (size_t i = 0; i < model.dec_w.a.size(); ++i)
      model.dec_w.a[i] -= cfg.learning_rate * gw2.a[i];
    for (int h = 0; h < hidden; ++h) model.enc_b[h] -= cfg.learning_rate * gb1[h];
    for (int f = 0; f < f_count; ++f) model.dec_b[f] -= cfg.learning_rate * gb2[f];
  }
  return model;
}

double reconstruction_error(const AutoencoderModel& model, const Mat& x) {
  const int rows = x.rows, f_count = x.cols;
  const int hidden = model.enc_w.rows;
  Vec z(hidden);
  double sum = 0.0;
  for (int r = 0; r < rows; ++r) {
    const double* row = x.row(r);
    for (int h = 0; h < hidden; ++h) {
      double pre = model.enc_b[h];
      const double* w = model.enc_w.row(h);
      for (int f = 0; f < f_count; ++f) pre += w[f] * row[f];
      z[h] = 1.0 / (1.0 + std::exp(-pre));
    }
    for (int f = 0; f < f_count; ++f) {
      double v = model.dec_b[f];
      const double* w = model.dec_w.row(f);
      for (int h = 0; h < hidden; ++h) v += w[h] * z[h];
      const double e = v - row[f];
      sum += e * e;
    }
  }
  return sum / (static_cast<double>(rows) * f_count);
}

SelectionReport autoencoder_select(const Mat& x, int k, int target_index,
                                   const AutoencoderConfig& cfg) {
  const AutoencoderModel model = fit_autoencoder(x, cfg);
  const double base = reconstruction_error(model, x);
  const int f_count = x.cols;
  const uint64_t perm_stream = derive_seed(cfg.seed, 0xFEA7);

  Vec scores(f_count, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < f_count; ++f) {
    Mat permuted = x;
    std::vector<double> column(x.rows);
    for (int r = 0; r < x.rows; ++r) column[r] = x.at(r, f);
    Rng perm_rng(derive_seed(perm_stream, static_cast<uint64_t>(f)));
    perm_rng.shuffle(column);
    for (int r = 0; r < x.rows; ++r) permuted.at(r, f) = column[r];
    scores[f] = reconstruction_error(model, permuted) - base;
  }

  SelectionReport report;
  report.method = "autoencoder";
  report.k = k;
  report.scores = scores;
  report.selected = finalize_selection(scores, k, target_index);
  return report;
}

}  // namespace flowcast::featsel
