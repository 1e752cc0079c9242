#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowcast/featsel.hpp"

namespace flowcast::featsel {

namespace {

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // absolute SSE reduction

  bool beats(const BestSplit& other) const {
    if (feature < 0) return false;
    if (other.feature < 0) return true;
    if (gain != other.gain) return gain > other.gain;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

struct TreeBuilder {
  const Mat& x;
  const Vec& y;
  int max_depth;
  int min_samples_leaf;
  int features_per_split;
  double total_rows;
  Rng rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<int>& idx, int depth) {
    const int n = static_cast<int>(idx.size());
    double sum = 0.0, sumsq = 0.0;
    for (int i : idx) {
      sum += y[i];
      sumsq += y[i] * y[i];
    }
    const double mean = sum / n;
    double sse = sumsq - sum * sum / n;
    if (sse < 0.0) sse = 0.0;

    // variance at or below FP noise counts as pure
    const bool pure = sse <= n * 1e-12 * (1.0 + mean * mean);
    if (depth >= max_depth || n < 2 * min_samples_leaf || pure) return make_leaf(mean);

    // random feature subset (partial Fisher-Yates)
    std::vector<int> feats(x.cols);
    std::iota(feats.begin(), feats.end(), 0);
    for (int i = 0; i < features_per_split; ++i) {
      const int j = i + rng.index(x.cols - i);
      std::swap(feats[i], feats[j]);
    }

    BestSplit best;
    std::vector<std::pair<double, int>> vals(n);
    Vec prefix_sum(n + 1, 0.0), prefix_sumsq(n + 1, 0.0);
    for (int ci = 0; ci < features_per_split; ++ci) {
      const int f = feats[ci];
      for (int i = 0; i < n; ++i) vals[i] = {x.at(idx[i], f), idx[i]};
      std::sort(vals.begin(), vals.end());
      for (int i = 0; i < n; ++i) {
        const double t = y[vals[i].second];
        prefix_sum[i + 1] = prefix_sum[i] + t;
        prefix_sumsq[i + 1] = prefix_sumsq[i] + t * t;
      }
      for (int i = min_samples_leaf; i <= n - min_samples_leaf; ++i) {
        if (vals[i - 1].first == vals[i].first) continue;
        const double s_l = prefix_sum[i], ss_l = prefix_sumsq[i];
        const double s_r = prefix_sum[n] - s_l, ss_r = prefix_sumsq[n] - ss_l;
        const double sse_l = ss_l - s_l * s_l / i;
        const double sse_r = ss_r - s_r * s_r / (n - i);
        BestSplit cand;
        cand.feature = f;
        cand.gain = sse - sse_l - sse_r;
        double thr = 0.5 * (vals[i - 1].first + vals[i].first);
        if (!(thr < vals[i].first)) thr = vals[i - 1].first;  // keep x <= thr consistent
        cand.threshold = thr;
        if (cand.beats(best)) best = cand;
      }
    }

    if (best.feature < 0 || best.gain <= 1e-12 * (1.0 + sse)) return make_leaf(mean);

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(n);
    for (int i : idx) (x.at(i, best.feature) <= best.threshold ? left_idx : right_idx).push_back(i);

    const int node_id = static_cast<int>(nodes.size());
    TreeNode node;
    node.split_feature = best.feature;
    node.split_threshold = best.threshold;
    node.prediction = mean;
    node.impurity_decrease = best.gain / total_rows;
    nodes.push_back(node);
    const int left_id = build(left_idx, depth + 1);
    const int right_id = build(right_idx, depth + 1);
    nodes[node_id].left = left_id;
    nodes[node_id].right = right_id;
    return node_id;
  }

  int make_leaf(double mean) {
    TreeNode node;
    node.prediction = mean;
    nodes.push_back(node);
    return static_cast<int>(nodes.size() - 1);
  }
};

RegressionTree build_one_tree(const Mat& x, const Vec& y, const ForestConfig& cfg,
                              int features_per_split, int tree_index) {
  std::vector<int> idx = bootstrap_indices(cfg.seed, tree_index, x.rows);
  TreeBuilder builder{x,
                      y,
                      cfg.max_depth,
                      cfg.min_samples_leaf,
                      features_per_split,
                      static_cast<double>(x.rows),
                      Rng(derive_seed(cfg.seed, 2 * static_cast<uint64_t>(tree_index) + 1)),
                      {}};
  builder.build(idx, 0);
  RegressionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

int resolved_features_per_split(const ForestConfig& cfg, int f_count) {
  if (cfg.features_per_split > 0) return std::min(cfg.features_per_split, f_count);
  return (f_count + 2) / 3;  // ceil(F / 3)
}

RandomForest fit_forest_impl(const Mat& x, const Vec& y, const ForestConfig& cfg,
                             bool parallel) {
  if (x.rows == 0) throw DataError("random forest: empty data");
  if (x.rows != static_cast<int>(y.size()))
    throw DataError("random forest: rows != target length");
  if (cfg.n_trees < 1) throw ConfigError("random forest: need at least one tree");
  if (cfg.min_samples_leaf < 1) throw ConfigError("random forest: min_samples_leaf must be >= 1");
  if (cfg.max_depth < 0) throw ConfigError("random forest: max_depth must be >= 0");
  if (x.rows < 2 * cfg.min_samples_leaf)
    throw DataError("random forest: need at least 2*min_samples_leaf rows, got " +
                    std::to_string(x.rows));

  RandomForest forest;
  forest.feature_count = x.cols;
  forest.features_per_split = resolved_features_per_split(cfg, x.cols);
  forest.bootstrap_seed = cfg.seed;
  forest.trees.resize(cfg.n_trees);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int t = 0; t < cfg.n_trees; ++t)
    forest.trees[t] = build_one_tree(x, y, cfg, forest.features_per_split, t);
  return forest;
}

}  // namespace

std::vector<int> bootstrap_indices(uint64_t seed, int tree_index, int n) {
  Rng rng(derive_seed(seed, 2 * static_cast<uint64_t>(tree_index)));
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = rng.index(n);
  return idx;
}

double RegressionTree::predict(const double* row) const {
  int node = 0;
  while (nodes[node].split_feature >= 0) {
    const TreeNode& cur = nodes[node];
    node = row[cur.split_feature] <= cur.split_threshold ? cur.left : cur.right;
  }
  return nodes[node].prediction;
}

double RandomForest::predict(const double* row) const {
  double sum = 0.0;
  for (const RegressionTree& tree : trees) sum += tree.predict(row);
  return sum / static_cast<double>(trees.size());
}

RandomForest fit_random_forest(const Mat& x, const Vec& y, const ForestConfig& cfg) {
  return fit_forest_impl(x, y, cfg, true);
}

RandomForest fit_random_forest_serial(const Mat& x, const Vec& y, const ForestConfig& cfg) {
  return fit_forest_impl(x, y, cfg, false);
}

Vec rf_importance(const RandomForest& forest) {
  if (forest.trees.empty()) throw DataError("rf_importance: empty forest");
  Vec importance(forest.feature_count, 0.0);
  for (const RegressionTree& tree : forest.trees)
    for (const TreeNode& node : tree.nodes)
      if (node.split_feature >= 0) importance[node.split_feature] += node.impurity_decrease;

  double total = 0.0;
  for (double v : importance) total += v;
  if (total > 0.0)
    for (double& v : importance) v /= total;
  return importance;
}

SelectionReport embedded_select(const Mat& x, const Vec& y, int k, int target_index,
                                const ForestConfig& cfg) {
  const RandomForest forest = fit_random_forest(x, y, cfg);
  const Vec importance = rf_importance(forest);

  SelectionReport report;
  report.method = "embedded";
  report.k = k;
  report.scores = importance;
  report.selected = finalize_selection(importance, k, target_index);
  return report;
}

}  // namespace flowcast::featsel
