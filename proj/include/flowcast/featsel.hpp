// featsel: ranked feature subsets via four families — correlation filter,
// greedy forward wrapper over an OLS proxy, random-forest importance
// (embedded), and autoencoder permutation importance. The forecast target's
// own history is force-included in every selection.
#pragma once

#include <string>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast::featsel {

// Features a wrapper run never added carry this sentinel score.
inline constexpr double kUnrankedScore = -1e308;

struct SelectionReport {
  std::string method;         // filter | wrapper | embedded | autoencoder | none
  int k = 0;
  Vec scores;                 // length F
  std::vector<int> selected;  // size k; descending score, ascending-index tiebreak
};

std::string to_json(const SelectionReport& r);
SelectionReport selection_from_json(const std::string& text);

// Force-includes target_index, takes the top k by (score desc, index asc),
// and orders the result the same way.
std::vector<int> finalize_selection(const Vec& scores, int k, int target_index);

// score_f = |Pearson correlation(feature f, target)|; zero variance scores 0.
SelectionReport filter_select(const Mat& x, const Vec& y, int k, int target_index);

struct WrapperConfig {
  double holdout_fraction = 0.25;  // chronological tail used for proxy validation
};

// Greedy forward selection scored by holdout MAE of an OLS proxy. The target
// feature is the mandatory first pick; each later round adds the candidate
// with the lowest holdout MAE (ties to the lowest index). Scores are the
// negative best-MAE at the round of addition. Singular proxy fits fall back
// to a ridge-stabilized solve (diagonal shift 1e-8).
SelectionReport wrapper_select(const Mat& x, const Vec& y, int k, int target_index,
                               const WrapperConfig& cfg = {});
SelectionReport wrapper_select_serial(const Mat& x, const Vec& y, int k, int target_index,
                                      const WrapperConfig& cfg = {});

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 12;
  int min_samples_leaf = 5;
  int features_per_split = 0;  // 0: ceil(F / 3)
  uint64_t seed = 0;
};

struct TreeNode {
  int split_feature = -1;  // -1 marks a leaf
  double split_threshold = 0.0;
  int left = -1;
  int right = -1;
  double prediction = 0.0;
  double impurity_decrease = 0.0;  // SSE reduction / total bootstrap rows
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(const double* row) const;
};

struct RandomForest {
  std::vector<RegressionTree> trees;
  int feature_count = 0;
  int features_per_split = 0;
  uint64_t bootstrap_seed = 0;
  double predict(const double* row) const;
};

// Trees fit on bootstrap resamples; splits maximize variance reduction over a
// random feature subset; thresholds are midpoints between consecutive sorted
// values. Per-tree RNG streams derive from (seed, tree index), so the parallel
// build is bit-identical to fit_random_forest_serial.
RandomForest fit_random_forest(const Mat& x, const Vec& y, const ForestConfig& cfg);
RandomForest fit_random_forest_serial(const Mat& x, const Vec& y, const ForestConfig& cfg);

// The resample drawn for one tree; shared with the verification tests.
std::vector<int> bootstrap_indices(uint64_t seed, int tree_index, int n);

// score_f = total impurity decrease at nodes splitting on f, normalized to
// sum 1 (an all-zero vector stays all-zero).
Vec rf_importance(const RandomForest& forest);

SelectionReport embedded_select(const Mat& x, const Vec& y, int k, int target_index,
                                const ForestConfig& cfg);

struct AutoencoderConfig {
  int hidden_width = 0;  // 0: max(1, ceil(F / 2)); must stay below F
  int epochs = 300;
  double learning_rate = 0.1;
  uint64_t seed = 0;
};

struct AutoencoderModel {
  Mat enc_w;  // H x F
  Vec enc_b;  // H
  Mat dec_w;  // F x H
  Vec dec_b;  // F
};

// Sigmoid bottleneck, identity output, full-batch gradient descent on the
// mean squared reconstruction error.
AutoencoderModel fit_autoencoder(const Mat& x, const AutoencoderConfig& cfg);
double reconstruction_error(const AutoencoderModel& model, const Mat& x);

// score_f = rise in mean reconstruction error when column f is permuted
// (permutation fixed per feature from the config seed).
SelectionReport autoencoder_select(const Mat& x, int k, int target_index,
                                   const AutoencoderConfig& cfg);

}  // namespace flowcast::featsel
