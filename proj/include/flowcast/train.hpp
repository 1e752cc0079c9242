// train: MSE training of the hybrid network by backpropagation through time,
// with gradient clipping, the recurrent-weight clamp, and a finite-difference
// gradient checker. Per-sample gradients are computed independently and
// reduced in ascending sample order, so parallel and serial runs are
// bit-identical.
#pragma once

#include <utility>
#include <vector>

#include "flowcast/dataio.hpp"
#include "flowcast/nn.hpp"

namespace flowcast::train {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip_norm = 5.0;
  uint64_t seed = 0;
  double validation_fraction = 0.1;  // chronological tail of the given samples
};

// Shape-mirror of the network's parameters.
struct GradientSet {
  std::vector<nn::IndRnnLayer> indrnn;
  nn::LstmLayer lstm;
  nn::DenseLayer head;
};

GradientSet zero_gradients(const nn::HybridNetwork& net);

inline std::vector<nn::TensorRef> tensor_refs(GradientSet& g) {
  return nn::detail::collect_tensor_refs(g);
}

double mse_loss(const Vec& predictions, const Vec& targets);

// Exact analytic gradients of the mean batch MSE with respect to every
// parameter, plus the batch loss. backward parallelizes over samples;
// backward_serial is the reference implementation.
std::pair<GradientSet, double> backward(const nn::HybridNetwork& net,
                                        const dataio::WindowedDataset& ds,
                                        const std::vector<int>& sample_indices);
std::pair<GradientSet, double> backward_serial(const nn::HybridNetwork& net,
                                               const dataio::WindowedDataset& ds,
                                               const std::vector<int>& sample_indices);

// Accumulates loss_scale * d((pred - target)^2)/dtheta into acc and returns
// the prediction. The batch routines call this with loss_scale = 1/batch.
double accumulate_sample_gradient(const nn::HybridNetwork& net, SeqView window,
                                  double target, double loss_scale, GradientSet& acc);

double gradient_norm(const GradientSet& g);

// If the global L2 norm exceeds max_norm, scales every entry by max_norm/norm.
void clip_gradients(GradientSet& g, double max_norm);

struct AdamState {
  GradientSet m, v;
  long step = 0;
};

AdamState init_adam(const nn::HybridNetwork& net);

// Bias-corrected Adam update; afterwards every IndRNN recurrent weight is
// clamped to [-u_max, u_max].
void adam_step(nn::HybridNetwork& net, const GradientSet& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainReport {
  std::vector<double> train_loss;  // one entry per completed epoch
  std::vector<double> val_loss;    // NaN when no validation samples
  std::vector<double> seconds;     // wall time per epoch (not deterministic)
  uint64_t final_checksum = 0;
};

TrainReport train(nn::HybridNetwork& net, const dataio::WindowedDataset& ds,
                  const TrainConfig& cfg, AdamState* final_state = nullptr);

// CSV header: epoch,train_loss,val_loss,seconds
void write_loss_csv(const std::string& path, const TrainReport& report);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> per_tensor;  // worst error per tensor
};

// Central finite differences (per parameter) against the analytic gradients of
// the single-sample squared error. corrupt_tensor >= 0 doubles that tensor's
// analytic gradient first (detector sanity hook).
GradCheckResult grad_check(const nn::HybridNetwork& net, SeqView window, double target,
                           double epsilon, int corrupt_tensor = -1);

}  // namespace flowcast::train
