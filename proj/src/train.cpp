#include "flowcast/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace flowcast::train {

namespace {

Mat zeros_like(const Mat& src) { return Mat(src.rows, src.cols); }

void zero_out(GradientSet& g) {
  for (const nn::TensorRef& r : tensor_refs(g)) std::fill(r.data, r.data + r.size, 0.0);
}

void add_into(GradientSet& acc, GradientSet& g) {
  const auto ra = tensor_refs(acc);
  const auto rg = tensor_refs(g);
  for (size_t i = 0; i < ra.size(); ++i)
    for (size_t k = 0; k < ra[i].size; ++k) ra[i].data[k] += rg[i].data[k];
}

// Error path only: name the first non-finite activation.
std::string locate_nonfinite(const std::vector<nn::IndRnnTrace>& ind, const nn::LstmTrace& lstm) {
  for (size_t p = 0; p < ind.size(); ++p)
    for (int t = 0; t < ind[p].h.rows; ++t)
      for (int j = 0; j < ind[p].h.cols; ++j)
        if (!std::isfinite(ind[p].h.at(t, j)))
          return "indrnn layer " + std::to_string(p) + ", step " + std::to_string(t);
  for (int t = 0; t < lstm.h.rows; ++t)
    for (int j = 0; j < lstm.h.cols; ++j)
      if (!std::isfinite(lstm.h.at(t, j)) || !std::isfinite(lstm.c.at(t, j)))
        return "lstm, step " + std::to_string(t);
  return "dense head";
}

}  // namespace

GradientSet zero_gradients(const nn::HybridNetwork& net) {
  GradientSet g;
  for (const nn::IndRnnLayer& l : net.indrnn) {
    nn::IndRnnLayer z;
    z.W = zeros_like(l.W);
    z.u.assign(l.u.size(), 0.0);
    z.b.assign(l.b.size(), 0.0);
    z.act = l.act;
    z.u_max = l.u_max;
    g.indrnn.push_back(std::move(z));
  }
  const nn::LstmLayer& m = net.lstm;
  g.lstm.Wf = zeros_like(m.Wf);
  g.lstm.Wi = zeros_like(m.Wi);
  g.lstm.Wo = zeros_like(m.Wo);
  g.lstm.Wc = zeros_like(m.Wc);
  g.lstm.Uf = zeros_like(m.Uf);
  g.lstm.Ui = zeros_like(m.Ui);
  g.lstm.Uo = zeros_like(m.Uo);
  g.lstm.Uc = zeros_like(m.Uc);
  g.lstm.bf.assign(m.bf.size(), 0.0);
  g.lstm.bi.assign(m.bi.size(), 0.0);
  g.lstm.bo.assign(m.bo.size(), 0.0);
  g.lstm.bc.assign(m.bc.size(), 0.0);
  g.lstm.candidate_tanh = m.candidate_tanh;
  g.head.w.assign(net.head.w.size(), 0.0);
  g.head.b = 0.0;
  return g;
}

double mse_loss(const Vec& predictions, const Vec& targets) {
  if (predictions.size() != targets.size())
    throw DataError("mse_loss: length mismatch (" + std::to_string(predictions.size()) + " vs " +
                    std::to_string(targets.size()) + ")");
  if (predictions.empty()) throw DataError("mse_loss: empty vectors");
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sum += e * e;
  }
  return sum / static_cast<double>(predictions.size());
}

double accumulate_sample_gradient(const nn::HybridNetwork& net, SeqView window,
                                  double target, double loss_scale, GradientSet& acc) {
  const int steps = window.steps;
  std::vector<nn::IndRnnTrace> ind_traces(net.indrnn.size());
  SeqView v = window;
  for (size_t p = 0; p < net.indrnn.size(); ++p) {
    nn::indrnn_forward(net.indrnn[p], v, nullptr, &ind_traces[p]);
    v = view_of(ind_traces[p].h);
  }
  nn::LstmTrace lstm_trace;
  nn::lstm_forward(net.lstm, v, nullptr, nullptr, nullptr, &lstm_trace);
  const Mat& lstm_h = lstm_trace.h;
  const double pred = nn::dense_forward(net.head, lstm_h.row(steps - 1), lstm_h.cols);
  if (!std::isfinite(pred))
    throw NumericError("non-finite activation at " + locate_nonfinite(ind_traces, lstm_trace));

  const double dpred = loss_scale * 2.0 * (pred - target);
  const int m = net.lstm.size();
  const int n_in = net.lstm.in_size();

  // dense head
  const double* h_last = lstm_h.row(steps - 1);
  for (int k = 0; k < m; ++k) acc.head.w[k] += dpred * h_last[k];
  acc.head.b += dpred;

  // LSTM unrolling, last step to first
  Mat dh(steps, m);
  for (int k = 0; k < m; ++k) dh.at(steps - 1, k) = dpred * net.head.w[k];
  Mat dx(steps, n_in);
  Vec dc(m, 0.0);
  const SeqView lstm_in = v;

  for (int t = steps - 1; t >= 0; --t) {
    const double* x = lstm_in.step(t);
    const double* f = lstm_trace.f.row(t);
    const double* ig = lstm_trace.i.row(t);
    const double* o = lstm_trace.o.row(t);
    const double* g = lstm_trace.g.row(t);
    const double* c = lstm_trace.c.row(t);
    const double* c_prev = t > 0 ? lstm_trace.c.row(t - 1) : nullptr;
    const double* h_prev = t > 0 ? lstm_trace.h.row(t - 1) : nullptr;
    double* dx_row = dx.row(t);
    double* dh_prev_row = t > 0 ? dh.row(t - 1) : nullptr;

    for (int j = 0; j < m; ++j) {
      const double tc = std::tanh(c[j]);
      const double dh_j = dh.at(t, j);
      dc[j] += dh_j * o[j] * (1.0 - tc * tc);
      const double dpre_o = dh_j * tc * o[j] * (1.0 - o[j]);
      const double dpre_f = dc[j] * (c_prev ? c_prev[j] : 0.0) * f[j] * (1.0 - f[j]);
      const double dpre_i = dc[j] * g[j] * ig[j] * (1.0 - ig[j]);
      const double dg = dc[j] * ig[j];
      const double dpre_g = net.lstm.candidate_tanh ? dg * (1.0 - g[j] * g[j]) : dg;

      double* gwf = acc.lstm.Wf.row(j);
      double* gwi = acc.lstm.Wi.row(j);
      double* gwo = acc.lstm.Wo.row(j);
      double* gwc = acc.lstm.Wc.row(j);
      const double* wf = net.lstm.Wf.row(j);
      const double* wi = net.lstm.Wi.row(j);
      const double* wo = net.lstm.Wo.row(j);
      const double* wc = net.lstm.Wc.row(j);
      for (int k = 0; k < n_in; ++k) {
        gwf[k] += dpre_f * x[k];
        gwi[k] += dpre_i * x[k];
        gwo[k] += dpre_o * x[k];
        gwc[k] += dpre_g * x[k];
        dx_row[k] += wf[k] * dpre_f + wi[k] * dpre_i + wo[k] * dpre_o + wc[k] * dpre_g;
      }
      if (t > 0) {
        double* guf = acc.lstm.Uf.row(j);
        double* gui = acc.lstm.Ui.row(j);
        double* guo = acc.lstm.Uo.row(j);
        double* guc = acc.lstm.Uc.row(j);
        const double* uf = net.lstm.Uf.row(j);
        const double* ui = net.lstm.Ui.row(j);
        const double* uo = net.lstm.Uo.row(j);
        const double* uc = net.lstm.Uc.row(j);
        for (int k = 0; k < m; ++k) {
          guf[k] += dpre_f * h_prev[k];
          gui[k] += dpre_i * h_prev[k];
          guo[k] += dpre_o * h_prev[k];
          guc[k] += dpre_g * h_prev[k];
          dh_prev_row[k] += uf[k] * dpre_f + ui[k] * dpre_i + uo[k] * dpre_o + uc[k] * dpre_g;
        }
      }
      acc.lstm.bf[j] += dpre_f;
      acc.lstm.bi[j] += dpre_i;
      acc.lstm.bo[j] += dpre_o;
      acc.lstm.bc[j] += dpre_g;
      dc[j] *= f[j];  // carries to step t-1
    }
  }

  // IndRNN stack, top layer down
  Mat dh_seq = std::move(dx);
  for (int p = static_cast<int>(net.indrnn.size()) - 1; p >= 0; --p) {
    const nn::IndRnnLayer& layer = net.indrnn[p];
    nn::IndRnnLayer& grad = acc.indrnn[p];
    const nn::IndRnnTrace& trace = ind_traces[p];
    const SeqView layer_in = p == 0 ? window : view_of(ind_traces[p - 1].h);
    const int width = layer.size();
    const int in_w = layer.in_size();

    Mat dx_lower(steps, in_w);
    Vec carry(width, 0.0);
    for (int t = steps - 1; t >= 0; --t) {
      const double* x = layer_in.step(t);
      const double* h_row = trace.h.row(t);
      const double* h_prev = t > 0 ? trace.h.row(t - 1) : nullptr;
      double* dxl = dx_lower.row(t);
      for (int j = 0; j < width; ++j) {
        const double dtot = dh_seq.at(t, j) + carry[j];
        const double dpre = dtot * nn::activate_deriv_from_output(layer.act, h_row[j]);
        double* gw = grad.W.row(j);
        const double* w = layer.W.row(j);
        for (int k = 0; k < in_w; ++k) {
          gw[k] += dpre * x[k];
          dxl[k] += w[k] * dpre;
        }
        grad.b[j] += dpre;
        if (h_prev) grad.u[j] += dpre * h_prev[j];
        carry[j] = dpre * layer.u[j];
      }
    }
    dh_seq = std::move(dx_lower);
  }
  return pred;
}

std::pair<GradientSet, double> backward(const nn::HybridNetwork& net,
                                        const dataio::WindowedDataset& ds,
                                        const std::vector<int>& idx) {
  if (idx.empty()) throw DataError("backward: empty batch");
  const int batch = static_cast<int>(idx.size());
  const double scale = 1.0 / batch;

  std::vector<GradientSet> slots(batch, zero_gradients(net));
  Vec preds(batch, 0.0);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < batch; ++s)
    preds[s] = accumulate_sample_gradient(net, ds.window(idx[s]), ds.target(idx[s]), scale,
                                          slots[s]);

  GradientSet total = zero_gradients(net);
  double loss = 0.0;
  for (int s = 0; s < batch; ++s) {
    add_into(total, slots[s]);
    const double e = preds[s] - ds.target(idx[s]);
    loss += e * e;
  }
  loss /= batch;
  if (!std::isfinite(loss)) throw NumericError("non-finite batch loss");
  return {std::move(total), loss};
}

std::pair<GradientSet, double> backward_serial(const nn::HybridNetwork& net,
                                               const dataio::WindowedDataset& ds,
                                               const std::vector<int>& idx) {
  if (idx.empty()) throw DataError("backward: empty batch");
  const int batch = static_cast<int>(idx.size());
  const double scale = 1.0 / batch;

  GradientSet total = zero_gradients(net);
  GradientSet slot = zero_gradients(net);
  double loss = 0.0;
  for (int s = 0; s < batch; ++s) {
    zero_out(slot);
    const double pred =
        accumulate_sample_gradient(net, ds.window(idx[s]), ds.target(idx[s]), scale, slot);
    add_into(total, slot);
    const double e = pred - ds.target(idx[s]);
    loss += e * e;
  }
  loss /= batch;
  if (!std::isfinite(loss)) throw NumericError("non-finite batch loss");
  return {std::move(total), loss};
}

double gradient_norm(const GradientSet& g) {
  auto& mutable_g = const_cast<GradientSet&>(g);
  double sum = 0.0;
  for (const nn::TensorRef& r : tensor_refs(mutable_g))
    for (size_t k = 0; k < r.size; ++k) sum += r.data[k] * r.data[k];
  return std::sqrt(sum);
}

void clip_gradients(GradientSet& g, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip_gradients: max_norm must be positive");
  const double norm = gradient_norm(g);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (const nn::TensorRef& r : tensor_refs(g))
    for (size_t k = 0; k < r.size; ++k) r.data[k] *= scale;
}

AdamState init_adam(const nn::HybridNetwork& net) {
  return AdamState{zero_gradients(net), zero_gradients(net), 0};
}

void adam_step(nn::HybridNetwork& net, const GradientSet& grads, AdamState& state,
               const TrainConfig& cfg) {
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  const auto rp = tensor_refs(net);
  const auto rg = tensor_refs(const_cast<GradientSet&>(grads));
  const auto rm = tensor_refs(state.m);
  const auto rv = tensor_refs(state.v);
  for (size_t i = 0; i < rp.size(); ++i) {
    for (size_t k = 0; k < rp[i].size; ++k) {
      double& m = rm[i].data[k];
      double& v = rv[i].data[k];
      const double g = rg[i].data[k];
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      rp[i].data[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
  }
  for (nn::IndRnnLayer& l : net.indrnn)
    for (double& u : l.u) u = std::clamp(u, -l.u_max, l.u_max);
}

TrainReport train(nn::HybridNetwork& net, const dataio::WindowedDataset& ds,
                  const TrainConfig& cfg, AdamState* final_state) {
  if (ds.size() < 1) throw DataError("train: empty dataset");
  if (cfg.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(cfg.adam_beta1 > 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 > 0.0 && cfg.adam_beta2 < 1.0))
    throw ConfigError("train: adam betas must lie in (0, 1)");
  if (cfg.validation_fraction < 0.0 || cfg.validation_fraction > 0.5)
    throw ConfigError("train: validation_fraction must lie in [0, 0.5]");

  const int n = ds.size();
  const int n_val = static_cast<int>(std::floor(cfg.validation_fraction * n));
  const int n_train = n - n_val;

  AdamState state = init_adam(net);
  TrainReport report;

  std::vector<int> order(n_train);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    Rng epoch_rng(derive_seed(cfg.seed, static_cast<uint64_t>(epoch)));
    epoch_rng.shuffle(order);

    double loss_sum = 0.0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int end = std::min(n_train, start + cfg.batch_size);
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      std::sort(batch.begin(), batch.end());

      double batch_loss = 0.0;
      try {
        auto [grads, loss] = backward(net, ds, batch);
        batch_loss = loss;
        clip_gradients(grads, cfg.grad_clip_norm);
        adam_step(net, grads, state, cfg);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")");
      }
      loss_sum += batch_loss * (end - start);
    }
    report.train_loss.push_back(loss_sum / n_train);

    if (n_val > 0) {
      Vec preds(n_val, 0.0), targets(n_val, 0.0);
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n_val; ++i)
        preds[i] = nn::network_forward(net, ds.window(n_train + i));
      for (int i = 0; i < n_val; ++i) targets[i] = ds.target(n_train + i);
      const double vloss = mse_loss(preds, targets);
      if (!std::isfinite(vloss))
        throw NumericError("non-finite validation loss (epoch " + std::to_string(epoch) + ")");
      report.val_loss.push_back(vloss);
    } else {
      report.val_loss.push_back(std::numeric_limits<double>::quiet_NaN());
    }

    const auto t1 = std::chrono::steady_clock::now();
    report.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }

  report.final_checksum = nn::parameter_checksum(net);
  if (final_state) *final_state = std::move(state);
  return report;
}

void write_loss_csv(const std::string& path, const TrainReport& report) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write file: " + path);
  f << "epoch,train_loss,val_loss,seconds\n";
  for (size_t i = 0; i < report.train_loss.size(); ++i) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.6f", report.seconds[i]);
    f << (i + 1) << ',' << fmt_double(report.train_loss[i]) << ','
      << fmt_double(report.val_loss[i]) << ',' << secs << '\n';
  }
}

GradCheckResult grad_check(const nn::HybridNetwork& net, SeqView window, double target,
                           double epsilon, int corrupt_tensor) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3))
    throw ConfigError("grad_check: epsilon must lie in (0, 1e-3]");

  GradientSet analytic = zero_gradients(net);
  accumulate_sample_gradient(net, window, target, 1.0, analytic);

  nn::HybridNetwork work = net;
  const auto arefs = tensor_refs(analytic);
  const auto wrefs = tensor_refs(work);

  GradCheckResult result;
  for (size_t ti = 0; ti < wrefs.size(); ++ti) {
    const double factor = (corrupt_tensor >= 0 && static_cast<size_t>(corrupt_tensor) == ti)
                              ? 2.0
                              : 1.0;
    double worst = 0.0;
    for (size_t k = 0; k < wrefs[ti].size; ++k) {
      double& theta = wrefs[ti].data[k];
      const double orig = theta;
      theta = orig + epsilon;
      const double ep = nn::network_forward(work, window) - target;
      theta = orig - epsilon;
      const double em = nn::network_forward(work, window) - target;
      theta = orig;
      const double fd = (ep * ep - em * em) / (2.0 * epsilon);
      const double an = arefs[ti].data[k] * factor;
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
    result.per_tensor.emplace_back(wrefs[ti].name, worst);
    result.max_rel_error = std::max(result.max_rel_error, worst);
  }
  return result;
}

}  // namespace flowcast::train
