#ifndef GENEAE_EXPR_DATA_HPP
#define GENEAE_EXPR_DATA_HPP

/// @file expr_data.hpp Expression matrices: file I/O, label vocabulary,
/// min-max scaling and per-class stratified splitting.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace geneae {

/// Samples x genes matrix. Rows are samples, columns are features.
struct ExpressionDataset {
  std::vector<std::string> sample_ids;
  std::vector<std::string> gene_ids;
  Matrix values;
  /// Class names per sample; absent for inference-only data.
  std::optional<std::vector<std::string>> labels;

  Index n_samples() const { return values.rows(); }
  Index n_features() const { return values.cols(); }
  bool has_labels() const { return labels.has_value(); }

  /// Checks shape agreement and id uniqueness. Value range is not checked
  /// here since scaled and raw data share this type.
  void validate() const {
    if (static_cast<Index>(sample_ids.size()) != values.rows())
      fail(ErrorCode::dimension_mismatch, "sample_ids length " + std::to_string(sample_ids.size()) +
                                              " != rows " + std::to_string(values.rows()));
    if (static_cast<Index>(gene_ids.size()) != values.cols())
      fail(ErrorCode::dimension_mismatch, "gene_ids length " + std::to_string(gene_ids.size()) +
                                              " != cols " + std::to_string(values.cols()));
    if (labels && static_cast<Index>(labels->size()) != values.rows())
      fail(ErrorCode::dimension_mismatch, "labels length != rows");
    check_unique(sample_ids, "sample id");
    check_unique(gene_ids, "gene id");
  }

  ExpressionDataset subset(const std::vector<Index>& rows) const {
    ExpressionDataset out;
    out.gene_ids = gene_ids;
    out.values.resize(static_cast<Index>(rows.size()), values.cols());
    out.sample_ids.reserve(rows.size());
    if (labels) out.labels.emplace().reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Index r = rows[i];
      out.values.row(static_cast<Index>(i)) = values.row(r);
      out.sample_ids.push_back(sample_ids[static_cast<std::size_t>(r)]);
      if (labels) out.labels->push_back((*labels)[static_cast<std::size_t>(r)]);
    }
    return out;
  }

  const std::vector<std::string>& require_labels() const {
    if (!labels) fail(ErrorCode::missing_labels, "dataset has no labels");
    return *labels;
  }

 private:
  static void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids)
      if (!seen.insert(id).second)
        fail(ErrorCode::duplicate_id, std::string("duplicate ") + what + " '" + id + "'");
  }
};

/// Ordered class names; the index of a name is its class id.
struct LabelVocabulary {
  std::vector<std::string> names;
  /// Negative class for detection. Every other class counts as cancer.
  std::string negative = "normal";

  LabelVocabulary() = default;
  explicit LabelVocabulary(std::vector<std::string> class_names, std::string negative_class = "normal")
      : names(std::move(class_names)), negative(std::move(negative_class)) {
    std::unordered_set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) fail(ErrorCode::duplicate_id, "duplicate class name '" + n + "'");
  }

  std::size_t size() const { return names.size(); }

  std::optional<int> find(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<int>(it - names.begin());
  }

  int id_of(const std::string& name) const {
    auto id = find(name);
    if (!id) fail(ErrorCode::unknown_label, "unknown label '" + name + "'");
    return *id;
  }

  bool contains(const std::string& name) const { return find(name).has_value(); }

  /// "normal" followed by the 32 TCGA cancer codes.
  static LabelVocabulary tcga() {
    return LabelVocabulary({"normal", "KICH", "LIHC", "DLBC", "OV",   "USC",  "LGG",  "THCA",
                            "ACC",    "LUAD", "HNSC", "BLCA", "MESO", "ESCA", "UVM",  "CESC",
                            "LUSC",   "TGCT", "PAAD", "SARC", "KIRP", "UCEC", "STAD", "PCPG",
                            "KIRC",   "SKCM", "THYM", "PRAD", "READ", "GBM",  "BRCA", "CHOL",
                            "COAD"});
  }

  /// Vocabulary covering exactly the labels present. Names known to the
  /// TCGA vocabulary keep its order and come first; others follow sorted.
  static LabelVocabulary from_labels(const std::vector<std::string>& labels) {
    const auto ref = tcga();
    std::vector<std::string> uniq(labels.begin(), labels.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::stable_sort(uniq.begin(), uniq.end(), [&](const std::string& a, const std::string& b) {
      const int ia = ref.find(a).value_or(1 << 20);
      const int ib = ref.find(b).value_or(1 << 20);
      return ia < ib;
    });
    return LabelVocabulary(std::move(uniq));
  }
};

inline void to_json(nlohmann::json& j, const LabelVocabulary& v) {
  j = nlohmann::json{{"names", v.names}, {"negative", v.negative}};
}
inline void from_json(const nlohmann::json& j, LabelVocabulary& v) {
  v = LabelVocabulary(j.at("names").get<std::vector<std::string>>(),
                      j.value("negative", std::string("normal")));
}

enum class MatrixFormat { csv, tsv };

inline char delimiter_of(MatrixFormat f) { return f == MatrixFormat::csv ? ',' : '\t'; }

inline MatrixFormat format_from_path(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return (ext == ".tsv" || ext == ".txt") ? MatrixFormat::tsv : MatrixFormat::csv;
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == delim && !quoted) {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  for (auto& cell : cells) {
    auto b = cell.find_first_not_of(" \r");
    auto e = cell.find_last_not_of(" \r");
    cell = (b == std::string::npos) ? std::string() : cell.substr(b, e - b + 1);
  }
  return cells;
}

inline std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a matrix file whose header is `sample_id,<gene ids...>[,label]`.
///
/// When `label_column` is given that column becomes the labels and must be
/// present; otherwise a column literally named "label" is dropped. Labels
/// are checked against `vocab` when one is supplied.
inline ExpressionDataset load_matrix(const std::filesystem::path& path, MatrixFormat format,
                                     const std::optional<std::string>& label_column = std::nullopt,
                                     const LabelVocabulary* vocab = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_file, "cannot open '" + path.string() + "'");
  const char delim = delimiter_of(format);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, 1, "missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  auto header = detail::split_line(line, delim);
  if (header.empty() || header[0] != "sample_id")
    throw ParseError(1, 1, "first header cell must be 'sample_id'");

  std::optional<std::size_t> label_idx;
  const std::string label_name = label_column.value_or("label");
  for (std::size_t c = 1; c < header.size(); ++c)
    if (header[c] == label_name) label_idx = c;
  if (label_column && !label_idx)
    throw ParseError(1, header.size(), "label column '" + *label_column + "' not found");

  ExpressionDataset ds;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (label_idx && c == *label_idx) continue;
    feature_cols.push_back(c);
    ds.gene_ids.push_back(header[c]);
  }
  if (label_column) ds.labels.emplace();

  std::vector<double> flat;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_line(line, delim);
    if (cells.size() != header.size())
      throw ParseError(row, std::min(cells.size(), header.size()) + 1,
                       "expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
    ds.sample_ids.push_back(cells[0]);
    for (std::size_t c : feature_cols) {
      auto v = detail::parse_double(cells[c]);
      if (!v) throw ParseError(row, c + 1, "non-numeric cell '" + cells[c] + "'");
      if (!std::isfinite(*v)) throw ParseError(row, c + 1, "non-finite cell '" + cells[c] + "'");
      if (*v < 0.0) throw ParseError(row, c + 1, "negative cell '" + cells[c] + "'");
      flat.push_back(*v);
    }
    if (label_column) {
      const auto& lab = cells[*label_idx];
      if (vocab && !vocab->contains(lab))
        fail(ErrorCode::unknown_label, "row " + std::to_string(row) + ": unknown label '" + lab + "'");
      ds.labels->push_back(lab);
    }
  }

  const auto n = static_cast<Index>(ds.sample_ids.size());
  const auto p = static_cast<Index>(feature_cols.size());
  ds.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), n, p);
  ds.validate();
  return ds;
}

inline ExpressionDataset load_matrix(const std::filesystem::path& path,
                                     const std::optional<std::string>& label_column = std::nullopt,
                                     const LabelVocabulary* vocab = nullptr) {
  return load_matrix(path, format_from_path(path), label_column, vocab);
}

/// Writes `ds` in the layout `load_matrix` reads. Values use shortest
/// round-trip formatting, so reload is exact.
inline void write_matrix(const ExpressionDataset& ds, const std::filesystem::path& path,
                         MatrixFormat format) {
  ds.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::missing_file, "cannot write '" + path.string() + "'");
  const char delim = delimiter_of(format);
  out << "sample_id";
  for (const auto& g : ds.gene_ids) out << delim << g;
  if (ds.labels) out << delim << "label";
  out << '\n';
  char buf[64];
  for (Index r = 0; r < ds.n_samples(); ++r) {
    out << ds.sample_ids[static_cast<std::size_t>(r)];
    for (Index c = 0; c < ds.n_features(); ++c) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, ds.values(r, c));
      out << delim << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    if (ds.labels) out << delim << (*ds.labels)[static_cast<std::size_t>(r)];
    out << '\n';
  }
}

inline void write_matrix(const ExpressionDataset& ds, const std::filesystem::path& path) {
  write_matrix(ds, path, format_from_path(path));
}

/// log2(x + 1), an optional variance-stabilizing step before scaling.
inline ExpressionDataset log2p1(ExpressionDataset ds) {
  ds.values = (ds.values.array() + 1.0).log() / std::log(2.0);
  return ds;
}

struct MinMaxScaler {
  static constexpr int kVersion = 1;
  Vector mins;
  Vector maxs;

  Index size() const { return mins.size(); }

  void validate() const {
    if (mins.size() != maxs.size()) fail(ErrorCode::dimension_mismatch, "scaler min/max lengths differ");
    for (Index i = 0; i < mins.size(); ++i)
      if (!(maxs[i] >= mins[i])) fail(ErrorCode::bad_format, "scaler max < min at feature " + std::to_string(i));
  }
};

inline MinMaxScaler fit_minmax(const ExpressionDataset& train) {
  if (train.n_samples() == 0) fail(ErrorCode::empty_dataset, "cannot fit scaler on an empty dataset");
  return MinMaxScaler{train.values.colwise().minCoeff().transpose(),
                      train.values.colwise().maxCoeff().transpose()};
}

/// Maps each value to (x - min) / (max - min) clamped to [0, 1]. Constant
/// features map to 0.
inline Matrix apply_minmax(const MinMaxScaler& scaler, const Matrix& values) {
  if (values.cols() != scaler.size())
    fail(ErrorCode::dimension_mismatch, "scaler has " + std::to_string(scaler.size()) +
                                            " features, data has " + std::to_string(values.cols()));
  Matrix out(values.rows(), values.cols());
  for (Index c = 0; c < values.cols(); ++c) {
    const double lo = scaler.mins[c];
    const double range = scaler.maxs[c] - lo;
    if (range > 0.0) {
      out.col(c) = ((values.col(c).array() - lo) / range).cwiseMax(0.0).cwiseMin(1.0);
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

inline ExpressionDataset apply_minmax(const MinMaxScaler& scaler, ExpressionDataset data) {
  data.values = apply_minmax(scaler, data.values);
  return data;
}

inline Matrix inverse_minmax(const MinMaxScaler& scaler, const Matrix& scaled) {
  if (scaled.cols() != scaler.size()) fail(ErrorCode::dimension_mismatch, "scaler/data width mismatch");
  Matrix out(scaled.rows(), scaled.cols());
  for (Index c = 0; c < scaled.cols(); ++c)
    out.col(c) = scaled.col(c).array() * (scaler.maxs[c] - scaler.mins[c]) + scaler.mins[c];
  return out;
}

inline void to_json(nlohmann::json& j, const MinMaxScaler& s) {
  j = nlohmann::json{{"version", MinMaxScaler::kVersion},
                     {"mins", std::vector<double>(s.mins.data(), s.mins.data() + s.mins.size())},
                     {"maxs", std::vector<double>(s.maxs.data(), s.maxs.data() + s.maxs.size())}};
}

inline void from_json(const nlohmann::json& j, MinMaxScaler& s) {
  if (j.at("version").get<int>() != MinMaxScaler::kVersion)
    fail(ErrorCode::bad_format, "unsupported scaler version");
  auto mins = j.at("mins").get<std::vector<double>>();
  auto maxs = j.at("maxs").get<std::vector<double>>();
  s.mins = Eigen::Map<Vector>(mins.data(), static_cast<Index>(mins.size()));
  s.maxs = Eigen::Map<Vector>(maxs.data(), static_cast<Index>(maxs.size()));
  s.validate();
}

/// Indices of each distinct label, keyed by label name (sorted).
inline std::map<std::string, std::vector<Index>> indices_by_label(const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<Index>> by;
  for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].push_back(static_cast<Index>(i));
  return by;
}

struct Split {
  ExpressionDataset train;
  ExpressionDataset test;
};

/// Number of training rows a class of `count` samples contributes:
/// round(fraction * count), kept within [1, count - 1].
inline Index stratified_train_count(Index count, double train_fraction) {
  auto k = static_cast<Index>(std::llround(train_fraction * static_cast<double>(count)));
  return std::clamp<Index>(k, 1, count - 1);
}

/// Shuffles every class independently and sends round(fraction * count) of
/// each to train. Both halves keep the input's row order.
inline Split stratified_split(const ExpressionDataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::bad_config, "train_fraction must lie in (0, 1)");
  const auto& labels = data.require_labels();
  Rng rng(seed);
  std::vector<Index> train_rows, test_rows;
  for (auto& [name, rows] : indices_by_label(labels)) {
    if (rows.size() < 2)
      fail(ErrorCode::class_too_small, "class '" + name + "' has fewer than 2 samples");
    std::shuffle(rows.begin(), rows.end(), rng);
    const Index k = stratified_train_count(static_cast<Index>(rows.size()), train_fraction);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + k);
    test_rows.insert(test_rows.end(), rows.begin() + k, rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.subset(train_rows), data.subset(test_rows)};
}

enum class LabelMode { binary, multiclass };

/// Binary: 0 for the vocabulary's negative class, 1 for any other class.
/// Multiclass: the vocabulary index.
inline std::vector<int> encode_labels(const std::vector<std::string>& labels, const LabelVocabulary& vocab,
                                      LabelMode mode) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    const int id = vocab.id_of(l);
    out.push_back(mode == LabelMode::binary ? (l == vocab.negative ? 0 : 1) : id);
  }
  return out;
}

inline std::vector<int> encode_labels(const ExpressionDataset& data, const LabelVocabulary& vocab,
                                      LabelMode mode) {
  return encode_labels(data.require_labels(), vocab, mode);
}

}  // namespace geneae

#endif  // GENEAE_EXPR_DATA_HPP
