#ifndef GENEAE_EVAL_HPP
#define GENEAE_EVAL_HPP

/// @file eval.hpp Confusion matrices, detection rates and per-class recall.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace geneae {

/// C(i, j) counts samples of true class i predicted as class j.
using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

inline ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) fail(ErrorCode::dimension_mismatch, "y_true and y_pred differ in length");
  if (n_classes <= 0) fail(ErrorCode::bad_shape, "n_classes must be positive");
  ConfusionMatrix c = ConfusionMatrix::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      fail(ErrorCode::label_out_of_range, "pair (" + std::to_string(t) + ", " + std::to_string(p) +
                                              ") outside [0, " + std::to_string(n_classes) + ")");
    ++c(t, p);
  }
  return c;
}

/// Row-wise fractions; rows with no samples stay zero.
inline Matrix normalize_rows(const ConfusionMatrix& c) {
  Matrix out = Matrix::Zero(c.rows(), c.cols());
  for (Index r = 0; r < c.rows(); ++r) {
    const auto total = c.row(r).sum();
    if (total > 0) out.row(r) = c.row(r).cast<double>() / static_cast<double>(total);
  }
  return out;
}

inline double accuracy_of(const ConfusionMatrix& c) {
  const auto total = c.sum();
  return total > 0 ? static_cast<double>(c.trace()) / static_cast<double>(total) : 0.0;
}

/// Rates whose denominator is zero are empty (not applicable).
struct BinaryMetrics {
  double accuracy = 0.0;
  std::optional<double> fpr;
  std::optional<double> fnr;
};

inline BinaryMetrics binary_metrics(const ConfusionMatrix& c, int positive_class = 1) {
  if (c.rows() != 2 || c.cols() != 2) fail(ErrorCode::bad_shape, "binary metrics need a 2x2 confusion matrix");
  if (positive_class != 0 && positive_class != 1) fail(ErrorCode::bad_shape, "positive_class must be 0 or 1");
  const int pos = positive_class, neg = 1 - positive_class;
  const auto tp = c(pos, pos), fn = c(pos, neg), tn = c(neg, neg), fp = c(neg, pos);
  BinaryMetrics m;
  const auto total = tp + fn + tn + fp;
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  if (fp + tn > 0) m.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
  if (fn + tp > 0) m.fnr = static_cast<double>(fn) / static_cast<double>(fn + tp);
  return m;
}

struct PerClassReport {
  std::vector<std::optional<double>> recall;
  /// Classes with recall strictly above the threshold.
  int above_threshold = 0;
  double threshold = 0.90;
};

inline PerClassReport per_class_report(const ConfusionMatrix& c, double threshold = 0.90) {
  if (c.rows() != c.cols()) fail(ErrorCode::bad_shape, "per-class report needs a square confusion matrix");
  PerClassReport rep;
  rep.threshold = threshold;
  for (Index i = 0; i < c.rows(); ++i) {
    const auto total = c.row(i).sum();
    if (total == 0) {
      rep.recall.emplace_back();
      continue;
    }
    const double r = static_cast<double>(c(i, i)) / static_cast<double>(total);
    rep.recall.emplace_back(r);
    if (r > threshold) ++rep.above_threshold;
  }
  return rep;
}

struct EvalReport {
  std::vector<std::string> vocab;
  ConfusionMatrix confusion;
  Matrix normalized;
  double accuracy = 0.0;
  std::optional<double> fpr;
  std::optional<double> fnr;
  PerClassReport per_class;
};

/// Full report. Detection rates are filled for two-class problems with
/// class 1 as the positive (cancer) class.
inline EvalReport evaluate(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                           std::vector<std::string> class_names, double threshold = 0.90) {
  EvalReport r;
  const int k = static_cast<int>(class_names.size());
  r.vocab = std::move(class_names);
  r.confusion = confusion_matrix(y_true, y_pred, k);
  r.normalized = normalize_rows(r.confusion);
  r.accuracy = accuracy_of(r.confusion);
  if (k == 2) {
    auto m = binary_metrics(r.confusion, 1);
    r.fpr = m.fpr;
    r.fnr = m.fnr;
  }
  r.per_class = per_class_report(r.confusion, threshold);
  return r;
}

namespace detail {
inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json confusion = nlohmann::json::array();
  nlohmann::json normalized = nlohmann::json::array();
  for (Index i = 0; i < r.confusion.rows(); ++i) {
    std::vector<std::int64_t> crow;
    std::vector<double> nrow;
    for (Index j = 0; j < r.confusion.cols(); ++j) {
      crow.push_back(r.confusion(i, j));
      nrow.push_back(r.normalized(i, j));
    }
    confusion.push_back(crow);
    normalized.push_back(nrow);
  }
  nlohmann::json recall = nlohmann::json::array();
  for (const auto& v : r.per_class.recall) recall.push_back(detail::opt_json(v));
  return {{"vocab", r.vocab},
          {"confusion", confusion},
          {"normalized", normalized},
          {"accuracy", r.accuracy},
          {"fpr", detail::opt_json(r.fpr)},
          {"fnr", detail::opt_json(r.fnr)},
          {"per_class_recall", recall},
          {"above_threshold_count", r.per_class.above_threshold}};
}

/// Reads a report back; the recall threshold is not part of the schema and
/// defaults to 0.90.
inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.vocab = j.at("vocab").get<std::vector<std::string>>();
  const auto k = static_cast<Index>(r.vocab.size());
  const auto& conf = j.at("confusion");
  if (static_cast<Index>(conf.size()) != k) fail(ErrorCode::bad_format, "confusion rows != vocab size");
  r.confusion.resize(k, k);
  for (Index i = 0; i < k; ++i) {
    const auto row = conf[static_cast<std::size_t>(i)].get<std::vector<std::int64_t>>();
    if (static_cast<Index>(row.size()) != k) fail(ErrorCode::bad_format, "confusion is not square");
    for (Index c = 0; c < k; ++c) r.confusion(i, c) = row[static_cast<std::size_t>(c)];
  }
  r.normalized = normalize_rows(r.confusion);
  r.accuracy = j.at("accuracy").get<double>();
  if (!j.at("fpr").is_null()) r.fpr = j.at("fpr").get<double>();
  if (!j.at("fnr").is_null()) r.fnr = j.at("fnr").get<double>();
  r.per_class = per_class_report(r.confusion);
  return r;
}

inline std::string percent(const std::optional<double>& v, int decimals = 2) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f%%", decimals, *v * 100.0);
  return buf;
}

/// Plain-text rendering: summary metrics, then the row-normalized matrix as
/// percentages with a shade glyph per cell.
inline std::string render_text(const EvalReport& r) {
  std::ostringstream os;
  os << "accuracy " << percent(r.accuracy);
  if (r.vocab.size() == 2) os << "  FPR " << percent(r.fpr) << "  FNR " << percent(r.fnr);
  os << "\nclasses with recall > " << percent(r.per_class.threshold, 0) << ": " << r.per_class.above_threshold << " of "
     << r.vocab.size() << "\n\n";
  std::size_t w = 6;
  for (const auto& n : r.vocab) w = std::max(w, n.size());
  auto pad = [](const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
  };
  static const char* shades[] = {" ", ".", ":", "+", "#"};
  os << pad("true\\pred", w + 3);
  for (const auto& n : r.vocab) os << ' ' << pad(n, 8);
  os << "   recall\n";
  for (Index i = 0; i < r.confusion.rows(); ++i) {
    os << pad(r.vocab[static_cast<std::size_t>(i)], w + 3);
    for (Index j = 0; j < r.confusion.cols(); ++j) {
      const double f = r.normalized(i, j);
      char cell[32];
      std::snprintf(cell, sizeof cell, "%6.1f", f * 100.0);
      const int shade = std::min(4, static_cast<int>(std::floor(f * 5.0)));
      os << ' ' << cell << shades[shade] << ' ';
    }
    os << "   " << percent(r.per_class.recall[static_cast<std::size_t>(i)], 1) << '\n';
  }
  return os.str();
}

/// Heatmap of the row-normalized confusion matrix as an SVG document,
/// white (0) to dark blue (1).
inline std::string render_svg_heatmap(const EvalReport& r, int cell = 28) {
  const int k = static_cast<int>(r.vocab.size());
  const int margin = 90;
  const int size = margin + k * cell + 20;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i < k; ++i) {
    const auto& name = r.vocab[static_cast<std::size_t>(i)];
    os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + i * cell + cell / 2 + 3
       << "\" text-anchor=\"end\">" << name << "</text>\n";
    os << "<text transform=\"translate(" << margin + i * cell + cell / 2 + 3 << "," << margin - 4
       << ") rotate(-90)\">" << name << "</text>\n";
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double f = r.normalized(i, j);
      const int red = static_cast<int>(std::lround(255.0 * (1.0 - f)));
      const int green = static_cast<int>(std::lround(255.0 - f * (255.0 - 48.0)));
      const int blue = static_cast<int>(std::lround(255.0 - f * (255.0 - 107.0)));
      os << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"rgb(" << red << ',' << green << ',' << blue
         << ")\" stroke=\"#ccc\"/>\n";
      if (r.confusion(i, j) > 0) {
        os << "<text x=\"" << margin + j * cell + cell / 2 << "\" y=\"" << margin + i * cell + cell / 2 + 3
           << "\" text-anchor=\"middle\" fill=\"" << (f > 0.5 ? "white" : "black") << "\">"
           << static_cast<int>(std::lround(f * 100.0)) << "</text>\n";
      }
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace geneae

#endif  // GENEAE_EVAL_HPP
