#include "qek/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "qek/rng.hpp"

namespace qek {

namespace fs = std::filesystem;

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : DatasetError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

ChecksumMismatchError::ChecksumMismatchError(std::string expected, std::string actual)
    : DatasetError("checksum mismatch: expected sha256 " + expected + ", got " + actual),
      expected_(std::move(expected)),
      actual_(std::move(actual)) {}

// ---------------------------------------------------------------------------
// Manifest

namespace {

std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DatasetError("manifest: bad " + what + " '" + s + "'");
  return v;
}

constexpr std::string_view kBuiltinManifest = R"(# qek dataset manifest
version 1
dataset hayes-roth url=https://archive.ics.uci.edu/ml/machine-learning-databases/hayes-roth/hayes-roth.data sha256=unpinned file=hayes-roth.data delimiter=comma label=-1 ignore=0 features=4 classes=3
dataset heart url=https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/heart/heart.dat sha256=unpinned file=heart.dat delimiter=whitespace label=-1 ignore= features=13 classes=2
dataset seeds url=https://archive.ics.uci.edu/ml/machine-learning-databases/00236/seeds_dataset.txt sha256=unpinned file=seeds_dataset.txt delimiter=whitespace label=-1 ignore= features=7 classes=3
dataset wine url=https://archive.ics.uci.edu/ml/machine-learning-databases/wine/wine.data sha256=unpinned file=wine.data delimiter=comma label=0 ignore= features=13 classes=3
)";

}  // namespace

const DatasetSchema& Manifest::find(std::string_view name) const {
  for (const auto& d : datasets)
    if (d.name == name) return d;
  std::string known;
  for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
  throw UnknownDatasetError("unknown dataset '" + std::string(name) + "'; supported: " + known);
}

std::vector<std::string> Manifest::names() const {
  std::vector<std::string> out;
  for (const auto& d : datasets) out.push_back(d.name);
  return out;
}

Manifest parse_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  bool saw_version = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "version") {
      if (tokens.size() != 2) throw ParseError("manifest", lineno, "expected 'version <int>'");
      m.version = parse_int(tokens[1], "version");
      if (m.version != 1) throw ParseError("manifest", lineno, "unsupported manifest version");
      saw_version = true;
      continue;
    }
    if (tokens[0] != "dataset" || tokens.size() < 2)
      throw ParseError("manifest", lineno, "expected 'dataset <name> key=value...'");
    DatasetSchema s;
    s.name = tokens[1];
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto eq = tokens[t].find('=');
      if (eq == std::string::npos) throw ParseError("manifest", lineno, "expected key=value, got " + tokens[t]);
      const std::string key = tokens[t].substr(0, eq);
      const std::string value = tokens[t].substr(eq + 1);
      if (key == "url") {
        s.url = value;
      } else if (key == "sha256") {
        s.sha256 = value;
      } else if (key == "file") {
        s.file = value;
      } else if (key == "delimiter") {
        if (value == "comma")
          s.delimiter = Delimiter::Comma;
        else if (value == "whitespace")
          s.delimiter = Delimiter::Whitespace;
        else
          throw ParseError("manifest", lineno, "unknown delimiter " + value);
      } else if (key == "label") {
        s.label_column = parse_int(value, "label column");
      } else if (key == "ignore") {
        if (!value.empty())
          for (const auto& c : split_on(value, ',')) s.ignore_columns.push_back(parse_int(c, "ignore column"));
      } else if (key == "features") {
        s.n_features = parse_int(value, "feature count");
      } else if (key == "classes") {
        s.n_classes = parse_int(value, "class count");
      } else {
        throw ParseError("manifest", lineno, "unknown key " + key);
      }
    }
    if (s.url.empty() || s.sha256.empty() || s.file.empty() || s.n_features < 1 || s.n_classes < 2)
      throw ParseError("manifest", lineno, "incomplete entry for " + s.name);
    m.datasets.push_back(std::move(s));
  }
  if (!saw_version) throw ParseError("manifest", lineno, "missing version line");
  return m;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path.string());
  return parse_manifest(in);
}

const Manifest& builtin_manifest() {
  static const Manifest m = [] {
    std::istringstream in{std::string(kBuiltinManifest)};
    return parse_manifest(in);
  }();
  return m;
}

// ---------------------------------------------------------------------------
// Parsing

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.name = name;
  out.features = features.select_rows(rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels[r]);
  out.class_names = class_names;
  return out;
}

namespace {

bool is_missing(const std::string& tok) { return tok.empty() || tok == "?"; }

std::optional<double> to_double(const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::vector<std::string> tokenize(const std::string& line, Delimiter delim) {
  if (delim == Delimiter::Whitespace) return split_whitespace(line);
  auto cells = split_on(line, ',');
  for (auto& c : cells) c = trim(c);
  return cells;
}

int resolve_column(int col, std::size_t width) {
  return col < 0 ? static_cast<int>(width) + col : col;
}

// Class ids follow numeric order when every label parses as a number.
std::vector<std::string> order_classes(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  const bool numeric = std::all_of(names.begin(), names.end(), [](const auto& s) { return to_double(s).has_value(); });
  if (numeric)
    std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return *to_double(a) < *to_double(b); });
  return names;
}

Dataset assemble(const std::string& name, std::vector<std::vector<double>> rows, std::vector<std::string> raw_labels,
                 std::vector<std::string> warnings) {
  Dataset ds;
  ds.name = name;
  ds.class_names = order_classes(raw_labels);
  std::map<std::string, int> id;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) id[ds.class_names[i]] = static_cast<int>(i);
  ds.labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) ds.labels.push_back(id.at(l));
  ds.features = Matrix::from_rows(rows);
  ds.warnings = std::move(warnings);
  return ds;
}

}  // namespace

Dataset parse_dataset(const DatasetSchema& schema, std::istream& in, const std::string& source_name) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::vector<std::string> warnings;
  std::string line;
  std::size_t lineno = 0;
  bool canonical = false;
  std::size_t expected_width = 0;
  std::vector<std::size_t> dropped;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    if (lineno == 1 && line.rfind("label,", 0) == 0) {
      canonical = true;
      expected_width = split_on(line, ',').size();
      continue;
    }

    const auto cells = canonical ? tokenize(line, Delimiter::Comma) : tokenize(line, schema.delimiter);
    if (expected_width == 0) expected_width = static_cast<std::size_t>(schema.n_features) + 1 + schema.ignore_columns.size();
    if (cells.size() != expected_width)
      throw ParseError(source_name, lineno,
                       "expected " + std::to_string(expected_width) + " columns, found " + std::to_string(cells.size()));

    const int label_col = canonical ? 0 : resolve_column(schema.label_column, cells.size());
    std::vector<bool> skip(cells.size(), false);
    skip[static_cast<std::size_t>(label_col)] = true;
    if (!canonical)
      for (int c : schema.ignore_columns) skip[static_cast<std::size_t>(resolve_column(c, cells.size()))] = true;

    if (std::any_of(cells.begin(), cells.end(), is_missing)) {
      dropped.push_back(lineno);
      continue;
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (skip[c]) continue;
      const auto v = to_double(cells[c]);
      if (!v) throw ParseError(source_name, lineno, "column " + std::to_string(c) + ": not a number: '" + cells[c] + "'");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
    labels.push_back(cells[static_cast<std::size_t>(label_col)]);
  }
  if (rows.empty()) throw ParseError(source_name, lineno, "no data rows");
  if (!dropped.empty()) {
    std::string msg = source_name + ": dropped " + std::to_string(dropped.size()) + " incomplete rows (line";
    msg += dropped.size() > 1 ? "s" : "";
    for (std::size_t i = 0; i < dropped.size(); ++i) msg += (i ? ", " : " ") + std::to_string(dropped[i]);
    warnings.push_back(msg + ")");
  }

  Dataset ds = assemble(schema.name, std::move(rows), std::move(labels), std::move(warnings));
  if (schema.n_classes > 0 && ds.n_classes() != static_cast<std::size_t>(schema.n_classes))
    throw DatasetError(source_name + ": found " + std::to_string(ds.n_classes()) + " classes, schema for " +
                       schema.name + " expects " + std::to_string(schema.n_classes));
  if (schema.n_features > 0 && ds.features.cols() != static_cast<std::size_t>(schema.n_features))
    throw DatasetError(source_name + ": found " + std::to_string(ds.features.cols()) + " features, schema expects " +
                       std::to_string(schema.n_features));
  return ds;
}

Dataset load(const DatasetSchema& schema, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  Dataset ds = parse_dataset(schema, in, path.string());
  for (const auto& w : ds.warnings) std::cerr << "warning: " << path.string() << ": " << w << '\n';
  return ds;
}

void write_canonical_csv(std::ostream& out, const Dataset& ds) {
  out << "label";
  for (std::size_t j = 0; j < ds.features.cols(); ++j) out << ",f" << j;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.class_names[static_cast<std::size_t>(ds.labels[i])];
    for (double v : ds.features.row(i)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ',';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Transformations

namespace {

// Min-max scales every column; constant columns are dropped or zero-filled.
Matrix scale_columns(const Matrix& x, bool drop_constant, std::vector<std::size_t>* dropped) {
  std::vector<std::size_t> keep;
  std::vector<double> lo(x.cols()), hi(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    lo[j] = hi[j] = x.rows() ? x(0, j) : 0.0;
    for (std::size_t i = 1; i < x.rows(); ++i) {
      lo[j] = std::min(lo[j], x(i, j));
      hi[j] = std::max(hi[j], x(i, j));
    }
    if (hi[j] > lo[j] || !drop_constant)
      keep.push_back(j);
    else if (dropped)
      dropped->push_back(j);
  }
  Matrix out(x.rows(), keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t j = keep[k];
    const double range = hi[j] - lo[j];
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, k) = range > 0.0 ? (x(i, j) - lo[j]) / range : 0.0;
  }
  return out;
}

}  // namespace

Dataset normalize_minmax(const Dataset& ds) {
  std::vector<std::size_t> dropped;
  Dataset out = ds;
  out.features = scale_columns(ds.features, true, &dropped);
  if (out.features.cols() == 0) throw DatasetError(ds.name + ": every feature column is constant");
  for (std::size_t j : dropped) {
    const std::string msg = "dropped constant feature column " + std::to_string(j);
    out.warnings.push_back(msg);
    std::cerr << "warning: " << ds.name << ": " << msg << '\n';
  }
  return out;
}

ReduceMethod parse_reduce_method(std::string_view name) {
  if (name == "pca") return ReduceMethod::Pca;
  if (name == "truncate") return ReduceMethod::Truncate;
  throw std::invalid_argument("unknown reduction method '" + std::string(name) + "' (expected pca or truncate)");
}

std::string_view reduce_method_name(ReduceMethod method) {
  return method == ReduceMethod::Pca ? "pca" : "truncate";
}

PcaFit pca_fit(const Matrix& data, std::size_t n_out) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (n_out > d) throw std::invalid_argument("pca: more components than features");
  if (n < 2) throw std::invalid_argument("pca: need at least two samples");

  PcaFit fit;
  fit.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) fit.mean[j] += data(i, j);
  for (double& m : fit.mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = data(i, a) - fit.mean[a];
      for (std::size_t b = a; b < d; ++b) cov(a, b) += xa * (data(i, b) - fit.mean[b]);
    }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }

  const SymmetricEigen eig = jacobi_eigen(cov);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eig.values[a] > eig.values[b]; });

  fit.components = Matrix(n_out, d);
  for (std::size_t k = 0; k < n_out; ++k) {
    const std::size_t col = order[k];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::abs(eig.vectors(j, col)) > std::abs(eig.vectors(arg, col))) arg = j;
    const double sign = eig.vectors(arg, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) fit.components(k, j) = sign * eig.vectors(j, col);
    fit.variances.push_back(eig.values[col]);
  }
  return fit;
}

Matrix pca_project(const PcaFit& fit, const Matrix& data) {
  const std::size_t k = fit.components.rows();
  Matrix out(data.rows(), k);
  for (std::size_t i = 0; i < data.rows(); ++i)
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < data.cols(); ++j) s += (data(i, j) - fit.mean[j]) * fit.components(c, j);
      out(i, c) = s;
    }
  return out;
}

Dataset reduce_features(const Dataset& ds, std::size_t n_out, ReduceMethod method) {
  if (n_out > ds.features.cols())
    throw std::invalid_argument("reduce_features: asked for " + std::to_string(n_out) + " features, dataset has " +
                                std::to_string(ds.features.cols()));
  Dataset out = ds;
  if (method == ReduceMethod::Truncate) {
    out.features = ds.features.leading_columns(n_out);
    return out;
  }
  // Zero-variance components stay as all-zero columns so the width always matches n_out.
  out.features = scale_columns(pca_project(pca_fit(ds.features, n_out), ds.features), false, nullptr);
  return out;
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  return by_class;
}

}  // namespace

Split stratified_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("stratified_split: fraction must lie strictly between 0 and 1");
  Rng rng(seed);
  Split split;
  const auto by_class = rows_by_class(ds);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto rows = by_class[c];
    if (rows.size() < 2)
      throw DatasetError(ds.name + ": class " + ds.class_names[c] + " has " + std::to_string(rows.size()) +
                         " samples; splitting needs at least 2");
    shuffle(rows, rng);
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(rows.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    split.train_rows.insert(split.train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_rows.insert(split.test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  split.train = ds.subset(split.train_rows);
  split.test = ds.subset(split.test_rows);
  return split;
}

double split_balance_deviation(const Split& split, std::size_t n_classes) {
  std::vector<double> tr(n_classes, 0.0), te(n_classes, 0.0);
  for (int l : split.train.labels) tr[static_cast<std::size_t>(l)] += 1.0;
  for (int l : split.test.labels) te[static_cast<std::size_t>(l)] += 1.0;
  double worst = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double a = tr[c] / static_cast<double>(split.train.size());
    const double b = te[c] / static_cast<double>(split.test.size());
    worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

std::uint64_t select_split(const Dataset& ds, int n_candidates, double train_fraction, std::uint64_t base_seed) {
  if (n_candidates < 1) throw std::invalid_argument("select_split: need at least one candidate");
  std::uint64_t best_seed = base_seed;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_candidates; ++k) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(k);
    const double dev = split_balance_deviation(stratified_split(ds, train_fraction, seed), ds.n_classes());
    if (dev < best) {
      best = dev;
      best_seed = seed;
    }
  }
  return best_seed;
}

Dataset subsample_per_class(const Dataset& ds, std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw std::invalid_argument("subsample_per_class: cap must be >= 1");
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto rows : rows_by_class(ds)) {
    if (rows.size() > cap) {
      shuffle(rows, rng);
      rows.resize(cap);
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

}  // namespace qek
