// dataio: CSV ingestion, categorical encoding, normalization, sliding windows,
// and chronological train/test splits. Row order is treated as time order.
#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast::dataio {

struct Cell {
  std::string text;
  double value = 0.0;
  bool numeric = false;
};

struct Row {
  std::vector<Cell> cells;
  long line = 0;  // 1-based physical line in the source file
};

struct RawTable {
  std::vector<std::string> column_names;
  std::vector<Row> rows;
  int row_count() const { return static_cast<int>(rows.size()); }
  int col_count() const { return static_cast<int>(column_names.size()); }
};

// Splits one CSV line into cells; trims surrounding whitespace and classifies
// a cell as numeric when the whole token parses to a finite double.
std::vector<Cell> parse_csv_cells(const std::string& line);

RawTable load_csv(const std::string& path, bool has_header);

struct EncodingSpec {
  std::vector<std::string> column_names;            // layout the spec was fitted on
  std::set<int> categorical_columns;                // indices in the original layout
  std::map<int, std::map<std::string, int>> category_maps;  // ordinals by first appearance
  std::set<int> excluded_columns;                   // dropped from the feature matrix
  int target_column = 0;                            // index in the original layout

  // Columns that survive exclusion, ascending.
  std::vector<int> kept_columns() const;
  // Position of target_column among kept columns.
  int target_feature_index() const;
};

// Every all-text column (outside exclusions) becomes categorical; ordinals
// follow first appearance. The target column must be numeric in every row.
EncodingSpec fit_encoding(const RawTable& table, int target_column,
                          const std::set<int>& excluded = {});

struct FeatureMatrix {
  Mat values;  // T x F, all finite
  std::vector<std::string> feature_names;
  int target_index = 0;
};

FeatureMatrix apply_encoding(const RawTable& table, const EncodingSpec& spec);

// One record through the fitted encoding (streaming path). Unseen category
// text maps to the reserved ordinal = known-category count. line_no is used
// for error context only.
Vec encode_row(const std::vector<Cell>& cells, const EncodingSpec& spec, long line_no);

struct NormalizationParams {
  Vec mean, min, max;
  int feature_count() const { return static_cast<int>(mean.size()); }
};

NormalizationParams fit_normalizer(const FeatureMatrix& train_rows);

// x_new = (x - mean) / (max - min); a degenerate range maps the whole feature
// to 0. Values outside the fitted range are not clamped.
FeatureMatrix apply_normalizer(const FeatureMatrix& m, const NormalizationParams& p);
double normalize_value(double x, const NormalizationParams& p, int f);
double denormalize_value(double x, const NormalizationParams& p, int f);

// S = max(T - L, 0) samples over backing rows; sample s reads rows [s, s+L)
// and its target is row s+L at target_index.
struct WindowedDataset {
  Mat rows;
  int window_length = 0;
  int target_index = 0;

  int size() const { return std::max(0, rows.rows - window_length); }
  int feature_count() const { return rows.cols; }
  SeqView window(int s) const { return SeqView{rows.row(s), window_length, rows.cols}; }
  double target(int s) const { return rows.at(s + window_length, target_index); }
};

WindowedDataset make_windows(const FeatureMatrix& m, int window_length);

struct SplitSpec {
  double train_fraction = 0.8;
};

// Train takes the chronologically earliest floor(fraction * S) samples; test
// takes the rest. Errors if either side would be empty.
std::pair<WindowedDataset, WindowedDataset> split_chronological(const WindowedDataset& ds,
                                                                const SplitSpec& spec);

// Number of leading rows any training sample touches under the split; the
// normalizer and the feature selectors are fitted on exactly these rows.
int training_visible_rows(int total_rows, int window_length, double train_fraction);

// JSON artifacts. Field names are a stable contract:
// normalization {"mean","min","max"}, encoding {"category_maps","target_column", ...}.
std::string to_json(const NormalizationParams& p);
NormalizationParams normalization_from_json(const std::string& text);
std::string to_json(const EncodingSpec& spec);
EncodingSpec encoding_from_json(const std::string& text);

// Compact binary container for the prepared (normalized) series plus the
// windowing and split settings. Little-endian, fixed layout.
struct PreparedSeries {
  Mat rows;
  std::vector<std::string> feature_names;
  int target_index = 0;
  int window_length = 0;
  double train_fraction = 0.8;
};

void write_prepared(const std::string& path, const PreparedSeries& s);
PreparedSeries read_prepared(const std::string& path);

// Bundled NSL-KDD layout: 41 feature names plus "label" and "difficulty".
const std::vector<std::string>& nsl_kdd_column_names();

}  // namespace flowcast::dataio
