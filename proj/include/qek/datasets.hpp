#pragma once

// Dataset manifest, acquisition, parsing of the native UCI formats, min-max
// normalisation, PCA feature reduction and stratified splitting.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qek/align_train.hpp"
#include "qek/linalg.hpp"

namespace qek {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure at a 1-based line number.
class ParseError : public DatasetError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownDatasetError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

class ChecksumMismatchError : public DatasetError {
 public:
  ChecksumMismatchError(std::string expected, std::string actual);
  const std::string& expected() const { return expected_; }
  const std::string& actual() const { return actual_; }

 private:
  std::string expected_;
  std::string actual_;
};

class NetworkError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

enum class Delimiter { Comma, Whitespace };

/// Column layout of a native dataset file. Negative column indices count from
/// the end (-1 is the last column).
struct DatasetSchema {
  std::string name;
  std::string url;
  std::string sha256;  // lowercase hex, or "unpinned"
  std::string file;
  Delimiter delimiter = Delimiter::Comma;
  int label_column = -1;
  std::vector<int> ignore_columns;
  int n_features = 0;
  int n_classes = 0;

  bool digest_pinned() const { return sha256 != "unpinned"; }
};

struct Manifest {
  int version = 1;
  std::vector<DatasetSchema> datasets;

  /// Throws UnknownDatasetError listing the supported names.
  const DatasetSchema& find(std::string_view name) const;
  std::vector<std::string> names() const;
};

Manifest parse_manifest(std::istream& in);
Manifest load_manifest(const std::filesystem::path& path);
/// The manifest compiled into the library (same content as data/manifest.txt).
const Manifest& builtin_manifest();

struct Dataset {
  std::string name;
  Matrix features;
  std::vector<int> labels;  // 0-based class ids
  std::vector<std::string> class_names;
  std::vector<std::string> warnings;

  std::size_t size() const { return labels.size(); }
  std::size_t n_classes() const { return class_names.size(); }
  LabeledSet labeled() const { return {features, labels}; }
  Dataset subset(std::span<const std::size_t> rows) const;
};

enum class FetchStatus { Downloaded, Cached };

/// Downloads `schema.url` to `destination` and verifies the digest. A file that
/// already exists with the pinned digest is left untouched. Supports file://
/// URLs for offline mirrors.
FetchStatus fetch(const DatasetSchema& schema, const std::filesystem::path& destination);

std::string sha256_file(const std::filesystem::path& path);

/// Parses either the canonical CSV (header `label,f0,...`) or the native format
/// described by `schema`. Rows with missing values ('?' or empty) are dropped
/// and reported in `warnings`.
Dataset load(const DatasetSchema& schema, const std::filesystem::path& path);
Dataset parse_dataset(const DatasetSchema& schema, std::istream& in, const std::string& source_name);

void write_canonical_csv(std::ostream& out, const Dataset& ds);

/// Per-column (v - min) / (max - min); constant columns are dropped with a warning.
Dataset normalize_minmax(const Dataset& ds);

enum class ReduceMethod { Truncate, Pca };
ReduceMethod parse_reduce_method(std::string_view name);
std::string_view reduce_method_name(ReduceMethod method);

struct PcaFit {
  std::vector<double> mean;
  Matrix components;  // n_out x n_features, orthonormal rows
  std::vector<double> variances;
};

/// Top principal directions by cyclic Jacobi on the sample covariance. Each
/// component's largest-magnitude entry is made positive.
PcaFit pca_fit(const Matrix& data, std::size_t n_out);
Matrix pca_project(const PcaFit& fit, const Matrix& data);

Dataset reduce_features(const Dataset& ds, std::size_t n_out, ReduceMethod method);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

Split stratified_split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Max over classes of |train proportion - test proportion|.
double split_balance_deviation(const Split& split, std::size_t n_classes);

/// Seed in [base_seed, base_seed + n_candidates) with the smallest balance deviation.
std::uint64_t select_split(const Dataset& ds, int n_candidates, double train_fraction, std::uint64_t base_seed);

/// Keeps at most `cap` rows per class (seeded choice, original order kept).
Dataset subsample_per_class(const Dataset& ds, std::size_t cap, std::uint64_t seed);

}  // namespace qek
