#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "flowcast/train.hpp"
#include "test_util.hpp"

using namespace flowcast;
using namespace flowcast::train;

namespace {

nn::HybridNetwork small_net(uint64_t seed, int input = 4, std::vector<int> widths = {6},
                            int lstm = 5) {
  nn::Architecture arch;
  arch.input_size = input;
  arch.indrnn_widths = std::move(widths);
  arch.lstm_width = lstm;
  return nn::init_network(arch, seed);
}

dataio::WindowedDataset random_dataset(int rows, int features, int window, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> data(rows, std::vector<double>(features));
  for (auto& row : data)
    for (double& v : row) v = rng.uniform(-1.0, 1.0);
  return dataio::make_windows(testutil::matrix_from(data), window);
}

void zero_parameters(nn::HybridNetwork& net) {
  for (const nn::TensorRef& r : nn::tensor_refs(net)) std::fill(r.data, r.data + r.size, 0.0);
}

bool grads_bitwise_equal(GradientSet& a, GradientSet& b) {
  const auto ra = tensor_refs(a);
  const auto rb = tensor_refs(b);
  for (size_t i = 0; i < ra.size(); ++i)
    if (std::memcmp(ra[i].data, rb[i].data, ra[i].size * sizeof(double)) != 0) return false;
  return true;
}

}  // namespace

TEST_CASE("mse_loss basics") {
  CHECK(mse_loss({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(mse_loss({0}, {2}) == 4.0);
  CHECK(mse_loss({1, 3}, {2, 5}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(mse_loss({1}, {1, 2}), DataError);
  CHECK_THROWS_AS(mse_loss({}, {}), DataError);
}

TEST_CASE("backward on the zero network: only the head bias moves") {
  nn::HybridNetwork net = small_net(1);
  zero_parameters(net);
  net.head.b = 0.5;

  const auto ds = random_dataset(12, 4, 8, 3);
  // overwrite targets via the backing rows: use known targets 1 and 2
  dataio::WindowedDataset fixed = ds;
  fixed.rows.at(8, 0) = 1.0;
  fixed.rows.at(9, 0) = 2.0;

  const auto [grads, loss] = backward_serial(net, fixed, {0, 1});
  // dL/db = 2 * mean(b - y) = 2 * ((0.5-1) + (0.5-2)) / 2 = -2
  CHECK(grads.head.b == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(loss == doctest::Approx(((0.5 - 1) * (0.5 - 1) + (0.5 - 2) * (0.5 - 2)) / 2.0));

  // dead relu layers upstream receive zero gradient
  for (const double g : grads.indrnn[0].W.a) CHECK(g == 0.0);
  for (const double g : grads.indrnn[0].u) CHECK(g == 0.0);
  for (const double g : grads.lstm.Wf.a) CHECK(g == 0.0);
  for (const double g : grads.head.w) CHECK(g == 0.0);
}

TEST_CASE("duplicating a batch leaves the mean gradient unchanged") {
  const nn::HybridNetwork net = small_net(5);
  const auto ds = random_dataset(14, 4, 8, 7);

  auto [g1, l1] = backward_serial(net, ds, {0, 3});
  auto [g2, l2] = backward_serial(net, ds, {0, 0, 3, 3});
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-14));
  const auto r1 = tensor_refs(g1);
  const auto r2 = tensor_refs(g2);
  for (size_t i = 0; i < r1.size(); ++i)
    for (size_t k = 0; k < r1[i].size; ++k)
      CHECK(r1[i].data[k] == doctest::Approx(r2[i].data[k]).epsilon(1e-12));
}

TEST_CASE("batch gradient equals the mean of per-sample gradients") {
  const nn::HybridNetwork net = small_net(9);
  const auto ds = random_dataset(14, 4, 8, 11);
  const std::vector<int> batch = {0, 2, 4, 5};

  auto [batch_grads, loss] = backward_serial(net, ds, batch);

  GradientSet mean = zero_gradients(net);
  for (int s : batch) {
    GradientSet one = zero_gradients(net);
    accumulate_sample_gradient(net, ds.window(s), ds.target(s), 1.0, one);
    const auto rm = tensor_refs(mean);
    const auto ro = tensor_refs(one);
    for (size_t i = 0; i < rm.size(); ++i)
      for (size_t k = 0; k < rm[i].size; ++k)
        rm[i].data[k] += ro[i].data[k] / static_cast<double>(batch.size());
  }
  const auto rb = tensor_refs(batch_grads);
  const auto rm = tensor_refs(mean);
  for (size_t i = 0; i < rb.size(); ++i)
    for (size_t k = 0; k < rb[i].size; ++k)
      CHECK(rb[i].data[k] == doctest::Approx(rm[i].data[k]).epsilon(1e-12));
}

TEST_CASE("parallel backward is bit-identical to the serial reference") {
  const nn::HybridNetwork net = small_net(13);
  const auto ds = random_dataset(30, 4, 8, 17);
  std::vector<int> batch;
  for (int s = 0; s < ds.size(); ++s) batch.push_back(s);

  auto [gp, lp] = backward(net, ds, batch);
  auto [gs, ls] = backward_serial(net, ds, batch);
  CHECK(std::memcmp(&lp, &ls, sizeof(double)) == 0);
  CHECK(grads_bitwise_equal(gp, gs));
}

TEST_CASE("gradient check: analytic BPTT matches finite differences") {
  const nn::HybridNetwork net = small_net(21);
  Rng rng(22);
  Mat window(8, 4);
  for (double& v : window.a) v = rng.uniform(-1.0, 1.0);
  const double target = rng.uniform(-1.0, 1.0);

  const GradCheckResult res = grad_check(net, view_of(window), target, 1e-5);
  CHECK(res.max_rel_error < 1e-4);

  // the head loss is quadratic in the head parameters: central differences
  // are exact there
  for (const auto& [name, err] : res.per_tensor)
    if (name.rfind("head.", 0) == 0) CHECK(err < 1e-10);
}

TEST_CASE("gradient check flags a corrupted tensor at ~0.5 relative error") {
  const nn::HybridNetwork net = small_net(31);
  Rng rng(32);
  Mat window(8, 4);
  for (double& v : window.a) v = rng.uniform(-1.0, 1.0);

  const GradCheckResult res = grad_check(net, view_of(window), 0.3, 1e-5, /*corrupt=*/0);
  CHECK(res.max_rel_error == doctest::Approx(0.5).epsilon(0.05));
  CHECK(res.per_tensor[0].second == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("grad_check validates epsilon") {
  const nn::HybridNetwork net = small_net(41);
  Mat window(8, 4, 0.1);
  CHECK_THROWS_AS(grad_check(net, view_of(window), 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(grad_check(net, view_of(window), 0.0, 1e-2), ConfigError);
}

TEST_CASE("clip_gradients rescales only above the bound") {
  nn::HybridNetwork net = small_net(43);
  GradientSet g = zero_gradients(net);
  g.head.w[0] = 0.6;
  g.head.w[1] = 0.8;  // norm = 1
  GradientSet copy = g;
  clip_gradients(g, 5.0);
  CHECK(grads_bitwise_equal(g, copy));  // under the bound: untouched

  GradientSet big = zero_gradients(net);
  big.head.b = 10.0;
  clip_gradients(big, 5.0);
  CHECK(big.head.b == doctest::Approx(5.0));

  Rng rng(44);
  GradientSet rnd = zero_gradients(net);
  for (const nn::TensorRef& r : tensor_refs(rnd))
    for (size_t k = 0; k < r.size; ++k) r.data[k] = rng.uniform(-3.0, 3.0);
  clip_gradients(rnd, 2.5);
  CHECK(gradient_norm(rnd) <= 2.5 + 1e-12);
}

TEST_CASE("adam: zero gradients advance the step but not the parameters") {
  nn::HybridNetwork net = small_net(47);
  const uint64_t before = nn::parameter_checksum(net);
  AdamState state = init_adam(net);
  const GradientSet zeros = zero_gradients(net);
  TrainConfig cfg;
  adam_step(net, zeros, state, cfg);
  CHECK(state.step == 1);
  CHECK(nn::parameter_checksum(net) == before);
}

TEST_CASE("adam first step: delta = -lr * g / (|g| + eps)") {
  nn::HybridNetwork net = small_net(53);
  const double w_before = net.head.w[2];
  GradientSet g = zero_gradients(net);
  g.head.w[2] = 0.3;
  AdamState state = init_adam(net);
  TrainConfig cfg;
  adam_step(net, g, state, cfg);
  const double expected = -cfg.learning_rate * 0.3 / (0.3 + cfg.adam_epsilon);
  CHECK(net.head.w[2] - w_before == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adam clamps the recurrent weights to u_max") {
  nn::HybridNetwork net = small_net(59);
  net.indrnn[0].u_max = 1.5;
  net.indrnn[0].u[0] = 1.9;
  net.indrnn[0].u[1] = -1.9;
  AdamState state = init_adam(net);
  TrainConfig cfg;
  adam_step(net, zero_gradients(net), state, cfg);
  CHECK(net.indrnn[0].u[0] == 1.5);
  CHECK(net.indrnn[0].u[1] == -1.5);
  for (double u : net.indrnn[0].u) CHECK(std::abs(u) <= 1.5);
}

TEST_CASE("train: epochs = 0 returns the network unchanged") {
  nn::HybridNetwork net = small_net(61);
  const uint64_t before = nn::parameter_checksum(net);
  const auto ds = random_dataset(20, 4, 8, 62);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainReport report = flowcast::train::train(net, ds, cfg);
  CHECK(report.train_loss.empty());
  CHECK(nn::parameter_checksum(net) == before);
}

TEST_CASE("train is bit-deterministic given the seed") {
  const auto ds = random_dataset(26, 4, 8, 70);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.seed = 5;

  nn::HybridNetwork a = small_net(71);
  nn::HybridNetwork b = small_net(71);
  const TrainReport ra = flowcast::train::train(a, ds, cfg);
  const TrainReport rb = flowcast::train::train(b, ds, cfg);
  CHECK(ra.train_loss == rb.train_loss);
  CHECK(ra.val_loss == rb.val_loss);
  CHECK(ra.final_checksum == rb.final_checksum);
}

TEST_CASE("train reduces the loss on a small series") {
  const auto series = testutil::sine_series(40, 16.0, 0.5, 0.0, 3);
  const auto ds = dataio::make_windows(series, 8);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.learning_rate = 3e-3;
  cfg.validation_fraction = 0.0;
  cfg.seed = 7;

  nn::HybridNetwork net = small_net(73, 1, {8}, 8);
  const TrainReport report = flowcast::train::train(net, ds, cfg);
  REQUIRE(report.train_loss.size() == 60);
  CHECK(report.train_loss.back() < report.train_loss.front());
  CHECK(std::isnan(report.val_loss.back()));  // no validation split requested
}

TEST_CASE("loss CSV has the pinned header and one row per epoch") {
  const auto ds = random_dataset(20, 4, 8, 80);
  TrainConfig cfg;
  cfg.epochs = 3;
  nn::HybridNetwork net = small_net(81);
  const TrainReport report = flowcast::train::train(net, ds, cfg);

  const auto dir = testutil::make_temp_dir("losscsv");
  write_loss_csv((dir / "loss.csv").string(), report);
  const std::string text = testutil::read_file(dir / "loss.csv");
  CHECK(text.rfind("epoch,train_loss,val_loss,seconds\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("train rejects invalid configurations") {
  nn::HybridNetwork net = small_net(91);
  const auto ds = random_dataset(20, 4, 8, 92);
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(flowcast::train::train(net, ds, cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.validation_fraction = 0.9;
  CHECK_THROWS_AS(flowcast::train::train(net, ds, cfg), ConfigError);
  cfg = TrainConfig{};
  dataio::WindowedDataset empty;
  empty.window_length = 4;
  empty.rows = Mat(2, 1);
  CHECK_THROWS_AS(flowcast::train::train(net, empty, cfg), DataError);
}
