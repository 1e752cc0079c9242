// Benchmark comparing the OpenMP kernels against their serial reference
// implementations: batch BPTT gradients, random-forest fitting, and batch
// evaluation. Verifies that both paths produce bit-identical results.
#include <chrono>
#include <cstring>
#include <iostream>
#include <numeric>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "flowcast/detect.hpp"
#include "flowcast/featsel.hpp"
#include "flowcast/train.hpp"

using namespace flowcast;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

dataio::WindowedDataset random_dataset(int rows, int features, int window, uint64_t seed) {
  Rng rng(seed);
  dataio::FeatureMatrix m;
  m.values = Mat(rows, features);
  for (double& v : m.values.a) v = rng.uniform(-1.0, 1.0);
  for (int f = 0; f < features; ++f) m.feature_names.push_back("f" + std::to_string(f));
  m.target_index = 0;
  return dataio::make_windows(m, window);
}

bool grads_equal(train::GradientSet& a, train::GradientSet& b) {
  const auto ra = train::tensor_refs(a);
  const auto rb = train::tensor_refs(b);
  for (size_t i = 0; i < ra.size(); ++i)
    if (std::memcmp(ra[i].data, rb[i].data, ra[i].size * sizeof(double)) != 0) return false;
  return true;
}

bool forests_equal(const featsel::RandomForest& a, const featsel::RandomForest& b) {
  if (a.trees.size() != b.trees.size()) return false;
  for (size_t t = 0; t < a.trees.size(); ++t) {
    const auto& na = a.trees[t].nodes;
    const auto& nb = b.trees[t].nodes;
    if (na.size() != nb.size()) return false;
    for (size_t i = 0; i < na.size(); ++i) {
      if (na[i].split_feature != nb[i].split_feature || na[i].left != nb[i].left ||
          na[i].right != nb[i].right ||
          std::memcmp(&na[i].split_threshold, &nb[i].split_threshold, sizeof(double)) != 0 ||
          std::memcmp(&na[i].prediction, &nb[i].prediction, sizeof(double)) != 0 ||
          std::memcmp(&na[i].impurity_decrease, &nb[i].impurity_decrease, sizeof(double)) != 0)
        return false;
    }
  }
  return true;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   bitwise %s\n",
              name.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "equal" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  const int scale = quick ? 1 : 4;

#ifdef _OPENMP
  std::printf("OpenMP: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("OpenMP: disabled at build time\n");
#endif

  // batch gradient computation
  {
    nn::Architecture arch;
    arch.input_size = 8;
    arch.indrnn_widths = {32, 32};
    arch.lstm_width = 32;
    const nn::HybridNetwork net = nn::init_network(arch, 7);
    const auto ds = random_dataset(200, 8, 10, 11);
    std::vector<int> batch(std::min(64 * scale, ds.size()));
    std::iota(batch.begin(), batch.end(), 0);

    const int reps = quick ? 3 : 10;
    double t0 = now_ms();
    train::GradientSet gs = train::backward_serial(net, ds, batch).first;
    for (int r = 1; r < reps; ++r) train::backward_serial(net, ds, batch);
    const double serial_ms = (now_ms() - t0) / reps;

    t0 = now_ms();
    train::GradientSet gp = train::backward(net, ds, batch).first;
    for (int r = 1; r < reps; ++r) train::backward(net, ds, batch);
    const double parallel_ms = (now_ms() - t0) / reps;

    report("batch gradients", serial_ms, parallel_ms, grads_equal(gs, gp));
  }

  // random forest fitting
  {
    Rng rng(23);
    const int rows = 1000 * scale, features = 20;
    Mat x(rows, features);
    for (double& v : x.a) v = rng.uniform(-1.0, 1.0);
    Vec y(rows);
    for (int r = 0; r < rows; ++r) y[r] = 2.0 * x.at(r, 3) - x.at(r, 7) + 0.1 * rng.normal();

    featsel::ForestConfig cfg;
    cfg.n_trees = quick ? 20 : 100;
    cfg.seed = 5;

    double t0 = now_ms();
    const auto fs = featsel::fit_random_forest_serial(x, y, cfg);
    const double serial_ms = now_ms() - t0;
    t0 = now_ms();
    const auto fp = featsel::fit_random_forest(x, y, cfg);
    const double parallel_ms = now_ms() - t0;

    report("random forest fit", serial_ms, parallel_ms, forests_equal(fs, fp));
  }

  // batch evaluation
  {
    nn::Architecture arch;
    arch.input_size = 6;
    arch.indrnn_widths = {32, 32};
    arch.lstm_width = 32;
    const nn::HybridNetwork net = nn::init_network(arch, 3);
    const auto ds = random_dataset(1000 * scale, 6, 10, 17);

    double t0 = now_ms();
    const Vec ps = detect::predict_all_serial(net, ds);
    const double serial_ms = now_ms() - t0;
    t0 = now_ms();
    const Vec pp = detect::predict_all(net, ds);
    const double parallel_ms = now_ms() - t0;

    const bool identical =
        std::memcmp(ps.data(), pp.data(), ps.size() * sizeof(double)) == 0;
    report("batch evaluation", serial_ms, parallel_ms, identical);
  }

  return 0;
}
