#ifndef GENEAE_COMMON_HPP
#define GENEAE_COMMON_HPP

/// @file common.hpp Shared matrix aliases, error type and seeding helpers.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace geneae {

template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = MatrixT<double>;
using Vector = VectorT<double>;
using Index = Eigen::Index;

using Rng = std::mt19937_64;

/// Coarse failure category; the CLI maps each one onto an exit code.
enum class ErrorCategory { usage, data, numerical };

enum class ErrorCode {
  missing_file,
  parse_error,
  duplicate_id,
  unknown_label,
  empty_dataset,
  dimension_mismatch,
  missing_labels,
  class_too_small,
  bad_config,
  stale_activation_record,
  bad_dims,
  non_finite_loss,
  spec_mismatch,
  encoder_not_frozen,
  singular_covariance,
  empty_training_set,
  bad_hyperparams,
  bad_spec,
  label_out_of_range,
  bad_shape,
  bad_format,
  usage,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_file: return "MissingFile";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::duplicate_id: return "DuplicateId";
    case ErrorCode::unknown_label: return "UnknownLabel";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::missing_labels: return "MissingLabels";
    case ErrorCode::class_too_small: return "ClassTooSmall";
    case ErrorCode::bad_config: return "BadConfig";
    case ErrorCode::stale_activation_record: return "StaleActivationRecord";
    case ErrorCode::bad_dims: return "BadDims";
    case ErrorCode::non_finite_loss: return "NonFiniteLoss";
    case ErrorCode::spec_mismatch: return "SpecMismatch";
    case ErrorCode::encoder_not_frozen: return "EncoderNotFrozen";
    case ErrorCode::singular_covariance: return "SingularCovariance";
    case ErrorCode::empty_training_set: return "EmptyTrainingSet";
    case ErrorCode::bad_hyperparams: return "BadHyperparams";
    case ErrorCode::bad_spec: return "BadSpec";
    case ErrorCode::label_out_of_range: return "LabelOutOfRange";
    case ErrorCode::bad_shape: return "BadShape";
    case ErrorCode::bad_format: return "BadFormat";
    case ErrorCode::usage: return "UsageError";
  }
  return "Unknown";
}

inline ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::non_finite_loss:
    case ErrorCode::singular_covariance:
      return ErrorCategory::numerical;
    case ErrorCode::usage:
    case ErrorCode::bad_config:
    case ErrorCode::bad_hyperparams:
    case ErrorCode::bad_spec:
    case ErrorCode::bad_dims:
      return ErrorCategory::usage;
    default:
      return ErrorCategory::data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

/// Malformed cell in a matrix file. Row and column are 1-based file
/// coordinates (the header is row 1).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& what)
      : Error(ErrorCode::parse_error, "row " + std::to_string(row) + ", col " +
                                          std::to_string(col) + ": " + what),
        row_(row),
        col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

/// splitmix64 finalizer.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic per-stage seed derived from a root seed and a stage name.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix_seed(root ^ mix_seed(h));
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return mix_seed(root ^ mix_seed(index + 0x51ed27ULL));
}

}  // namespace geneae

#endif  // GENEAE_COMMON_HPP
