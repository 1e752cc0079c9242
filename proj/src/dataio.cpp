#include "flowcast/dataio.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace flowcast::dataio {

using nlohmann::json;

namespace {

std::string trimmed(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

bool parse_finite_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return false;
  if (!std::isfinite(v)) return false;
  out = v;
  return true;
}

}  // namespace

std::vector<Cell> parse_csv_cells(const std::string& line) {
  std::vector<Cell> cells;
  size_t start = 0;
  for (size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      Cell c;
      c.text = trimmed(line.substr(start, i - start));
      c.numeric = parse_finite_double(c.text, c.value);
      cells.push_back(std::move(c));
      start = i + 1;
    }
  }
  return cells;
}

RawTable load_csv(const std::string& path, bool has_header) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open file: " + path);

  RawTable table;
  std::string line;
  long line_no = 0;
  bool have_names = false;

  while (std::getline(f, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty()) continue;  // skip blank lines (trailing newlines etc.)

    std::vector<Cell> cells = parse_csv_cells(line);
    if (has_header && !have_names) {
      table.column_names.reserve(cells.size());
      for (const Cell& c : cells) table.column_names.push_back(c.text);
      have_names = true;
      continue;
    }
    if (!have_names && table.column_names.empty() && table.rows.empty()) {
      // headerless: synthesize names from the first data row's width
      table.column_names.reserve(cells.size());
      for (size_t i = 0; i < cells.size(); ++i)
        table.column_names.push_back("col" + std::to_string(i));
    }
    if (static_cast<int>(cells.size()) != table.col_count())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.col_count()) + " cells, got " +
                      std::to_string(cells.size()));
    table.rows.push_back(Row{std::move(cells), line_no});
  }

  if (table.rows.empty()) throw DataError("empty file: " + path);
  return table;
}

std::vector<int> EncodingSpec::kept_columns() const {
  std::vector<int> kept;
  for (int c = 0; c < static_cast<int>(column_names.size()); ++c)
    if (!excluded_columns.count(c)) kept.push_back(c);
  return kept;
}

int EncodingSpec::target_feature_index() const {
  int pos = 0;
  for (int c : kept_columns()) {
    if (c == target_column) return pos;
    ++pos;
  }
  throw ConfigError("target column is excluded from the feature set");
}

EncodingSpec fit_encoding(const RawTable& table, int target_column,
                          const std::set<int>& excluded) {
  if (target_column < 0 || target_column >= table.col_count())
    throw ConfigError("target column index out of range");
  if (excluded.count(target_column))
    throw ConfigError("target column cannot be excluded");

  for (const Row& row : table.rows) {
    if (!row.cells[target_column].numeric)
      throw DataError("line " + std::to_string(row.line) +
                      ": target column contains non-numeric cell '" +
                      row.cells[target_column].text + "'");
  }

  EncodingSpec spec;
  spec.column_names = table.column_names;
  spec.excluded_columns = excluded;
  spec.target_column = target_column;

  for (int c = 0; c < table.col_count(); ++c) {
    if (excluded.count(c)) continue;
    bool all_text = true;
    for (const Row& row : table.rows) {
      if (row.cells[c].numeric) {
        all_text = false;
        break;
      }
    }
    if (!all_text) continue;
    spec.categorical_columns.insert(c);
    std::map<std::string, int>& m = spec.category_maps[c];
    for (const Row& row : table.rows) {
      const std::string& key = row.cells[c].text;
      if (!m.count(key)) {
        const int ordinal = static_cast<int>(m.size());
        m.emplace(key, ordinal);
      }
    }
  }
  return spec;
}

Vec encode_row(const std::vector<Cell>& cells, const EncodingSpec& spec, long line_no) {
  if (cells.size() != spec.column_names.size())
    throw DataError("line " + std::to_string(line_no) + ": column layout mismatch (expected " +
                    std::to_string(spec.column_names.size()) + " cells, got " +
                    std::to_string(cells.size()) + ")");
  Vec out;
  out.reserve(spec.column_names.size() - spec.excluded_columns.size());
  for (int c = 0; c < static_cast<int>(spec.column_names.size()); ++c) {
    if (spec.excluded_columns.count(c)) continue;
    const Cell& cell = cells[c];
    if (spec.categorical_columns.count(c)) {
      const auto& m = spec.category_maps.at(c);
      const auto it = m.find(cell.text);
      out.push_back(it != m.end() ? static_cast<double>(it->second)
                                  : static_cast<double>(m.size()));
    } else {
      if (!cell.numeric)
        throw DataError("line " + std::to_string(line_no) + ", column '" +
                        spec.column_names[c] + "': non-numeric value '" + cell.text + "'");
      out.push_back(cell.value);
    }
  }
  return out;
}

FeatureMatrix apply_encoding(const RawTable& table, const EncodingSpec& spec) {
  if (table.col_count() != static_cast<int>(spec.column_names.size()))
    throw DataError("column layout mismatch: table has " + std::to_string(table.col_count()) +
                    " columns, encoding expects " + std::to_string(spec.column_names.size()));

  const std::vector<int> kept = spec.kept_columns();
  FeatureMatrix m;
  m.values = Mat(table.row_count(), static_cast<int>(kept.size()));
  for (int c : kept) m.feature_names.push_back(spec.column_names[c]);
  m.target_index = spec.target_feature_index();

  for (int r = 0; r < table.row_count(); ++r) {
    const Vec row = encode_row(table.rows[r].cells, spec, table.rows[r].line);
    std::copy(row.begin(), row.end(), m.values.row(r));
  }
  return m;
}

NormalizationParams fit_normalizer(const FeatureMatrix& m) {
  const int rows = m.values.rows, cols = m.values.cols;
  if (rows == 0) throw DataError("cannot fit normalizer on an empty matrix");
  if (rows < 2) throw DataError("normalizer needs at least 2 rows, got " + std::to_string(rows));

  NormalizationParams p;
  p.mean.assign(cols, 0.0);
  p.min.assign(cols, 0.0);
  p.max.assign(cols, 0.0);
  for (int f = 0; f < cols; ++f) {
    double sum = 0.0, lo = m.values.at(0, f), hi = lo;
    for (int r = 0; r < rows; ++r) {
      const double v = m.values.at(r, f);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    p.mean[f] = sum / rows;
    p.min[f] = lo;
    p.max[f] = hi;
  }
  return p;
}

double normalize_value(double x, const NormalizationParams& p, int f) {
  const double range = p.max[f] - p.min[f];
  if (range == 0.0) return 0.0;
  return (x - p.mean[f]) / range;
}

double denormalize_value(double x, const NormalizationParams& p, int f) {
  const double range = p.max[f] - p.min[f];
  return x * range + p.mean[f];
}

FeatureMatrix apply_normalizer(const FeatureMatrix& m, const NormalizationParams& p) {
  if (m.values.cols != p.feature_count())
    throw DataError("feature-count mismatch: matrix has " + std::to_string(m.values.cols) +
                    ", normalizer has " + std::to_string(p.feature_count()));
  FeatureMatrix out = m;
  for (int r = 0; r < m.values.rows; ++r)
    for (int f = 0; f < m.values.cols; ++f)
      out.values.at(r, f) = normalize_value(m.values.at(r, f), p, f);
  return out;
}

WindowedDataset make_windows(const FeatureMatrix& m, int window_length) {
  if (window_length < 1) throw ConfigError("window length must be >= 1");
  WindowedDataset ds;
  ds.rows = m.values;
  ds.window_length = window_length;
  ds.target_index = m.target_index;
  return ds;
}

std::pair<WindowedDataset, WindowedDataset> split_chronological(const WindowedDataset& ds,
                                                                const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  const int s = ds.size();
  const int n_train = static_cast<int>(std::floor(spec.train_fraction * s));
  if (n_train < 1 || s - n_train < 1)
    throw DataError("split would leave an empty side: " + std::to_string(s) + " samples at fraction " +
                    fmt_double(spec.train_fraction));

  const int l = ds.window_length;
  WindowedDataset train, test;
  train.window_length = test.window_length = l;
  train.target_index = test.target_index = ds.target_index;

  train.rows = Mat(n_train + l, ds.rows.cols);
  std::copy(ds.rows.row(0), ds.rows.row(0) + static_cast<size_t>(n_train + l) * ds.rows.cols,
            train.rows.a.begin());

  const int test_rows = ds.rows.rows - n_train;
  test.rows = Mat(test_rows, ds.rows.cols);
  std::copy(ds.rows.row(n_train), ds.rows.row(n_train) + static_cast<size_t>(test_rows) * ds.rows.cols,
            test.rows.a.begin());
  return {std::move(train), std::move(test)};
}

int training_visible_rows(int total_rows, int window_length, double train_fraction) {
  const int s = std::max(0, total_rows - window_length);
  const int n_train = static_cast<int>(std::floor(train_fraction * s));
  return std::min(total_rows, n_train + window_length);
}

std::string to_json(const NormalizationParams& p) {
  json j;
  j["mean"] = p.mean;
  j["min"] = p.min;
  j["max"] = p.max;
  return j.dump(2) + "\n";
}

NormalizationParams normalization_from_json(const std::string& text) {
  const json j = json::parse(text);
  NormalizationParams p;
  p.mean = j.at("mean").get<Vec>();
  p.min = j.at("min").get<Vec>();
  p.max = j.at("max").get<Vec>();
  if (p.min.size() != p.mean.size() || p.max.size() != p.mean.size())
    throw DataError("normalization document has inconsistent lengths");
  return p;
}

std::string to_json(const EncodingSpec& spec) {
  json maps = json::object();
  for (const auto& [col, m] : spec.category_maps) {
    json jm = json::object();
    for (const auto& [key, ordinal] : m) jm[key] = ordinal;
    maps[std::to_string(col)] = std::move(jm);
  }
  json j;
  j["target_column"] = spec.target_column;
  j["category_maps"] = std::move(maps);
  j["categorical_columns"] = std::vector<int>(spec.categorical_columns.begin(),
                                              spec.categorical_columns.end());
  j["excluded_columns"] = std::vector<int>(spec.excluded_columns.begin(),
                                           spec.excluded_columns.end());
  j["column_names"] = spec.column_names;
  return j.dump(2) + "\n";
}

EncodingSpec encoding_from_json(const std::string& text) {
  const json j = json::parse(text);
  EncodingSpec spec;
  spec.target_column = j.at("target_column").get<int>();
  spec.column_names = j.at("column_names").get<std::vector<std::string>>();
  for (int c : j.at("categorical_columns").get<std::vector<int>>())
    spec.categorical_columns.insert(c);
  for (int c : j.at("excluded_columns").get<std::vector<int>>())
    spec.excluded_columns.insert(c);
  for (const auto& [col_text, jm] : j.at("category_maps").items()) {
    std::map<std::string, int>& m = spec.category_maps[std::stoi(col_text)];
    for (const auto& [key, ordinal] : jm.items()) m[key] = ordinal.get<int>();
  }
  return spec;
}

namespace {

constexpr char kPreparedMagic[8] = {'F', 'C', 'P', 'R', 'E', 'P', '0', '1'};

template <class T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void read_pod(std::ifstream& f, T& v) {
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw DataError("truncated prepared-series file");
}

}  // namespace

void write_prepared(const std::string& path, const PreparedSeries& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write file: " + path);
  f.write(kPreparedMagic, sizeof kPreparedMagic);
  write_pod(f, static_cast<uint64_t>(s.rows.rows));
  write_pod(f, static_cast<uint64_t>(s.rows.cols));
  write_pod(f, static_cast<uint64_t>(s.target_index));
  write_pod(f, static_cast<uint64_t>(s.window_length));
  write_pod(f, s.train_fraction);
  write_pod(f, static_cast<uint64_t>(s.feature_names.size()));
  for (const std::string& name : s.feature_names) {
    write_pod(f, static_cast<uint64_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  f.write(reinterpret_cast<const char*>(s.rows.a.data()),
          static_cast<std::streamsize>(s.rows.a.size() * sizeof(double)));
  if (!f) throw DataError("short write: " + path);
}

PreparedSeries read_prepared(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kPreparedMagic, sizeof magic) != 0)
    throw DataError("not a prepared-series file: " + path);

  PreparedSeries s;
  uint64_t rows = 0, cols = 0, target = 0, window = 0, names = 0;
  read_pod(f, rows);
  read_pod(f, cols);
  read_pod(f, target);
  read_pod(f, window);
  read_pod(f, s.train_fraction);
  read_pod(f, names);
  for (uint64_t i = 0; i < names; ++i) {
    uint64_t len = 0;
    read_pod(f, len);
    std::string name(len, '\0');
    f.read(name.data(), static_cast<std::streamsize>(len));
    if (!f) throw DataError("truncated prepared-series file");
    s.feature_names.push_back(std::move(name));
  }
  s.rows = Mat(static_cast<int>(rows), static_cast<int>(cols));
  s.target_index = static_cast<int>(target);
  s.window_length = static_cast<int>(window);
  f.read(reinterpret_cast<char*>(s.rows.a.data()),
         static_cast<std::streamsize>(s.rows.a.size() * sizeof(double)));
  if (!f) throw DataError("truncated prepared-series file");
  return s;
}

const std::vector<std::string>& nsl_kdd_column_names() {
  static const std::vector<std::string> names = {
      "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
      "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
      "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
      "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
      "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
      "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
      "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
      "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
      "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
      "label", "difficulty"};
  return names;
}

}  // namespace flowcast::dataio
