#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sonfis/error.hpp"
#include "sonfis/numeric_format.hpp"
#include "sonfis/rng.hpp"

namespace sonfis {

/// One observation: condition attributes plus the decision attribute.
struct Record {
  std::vector<double> inputs;
  double decision = 0.0;

  bool operator==(const Record&) const = default;
};

/// Column order used by the hydrocyclone generator and expected by the CLI.
inline const std::array<std::string, 5> kCanonicalColumns = {
    "pressure_psi", "solids_pct", "size_um", "stream_flag", "cum_passing_pct"};

inline constexpr std::size_t kStreamFlagColumn = 3;

struct Dataset {
  std::vector<Record> records;
  std::size_t n_inputs = 0;
  /// n_inputs + 1 labels, decision last.
  std::vector<std::string> column_names;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::vector<double> decisions() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.decision);
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

inline std::vector<std::string> default_column_names(std::size_t n_inputs) {
  if (n_inputs + 1 == kCanonicalColumns.size())
    return {kCanonicalColumns.begin(), kCanonicalColumns.end()};
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n_inputs; ++j) names.push_back("x" + std::to_string(j + 1));
  names.emplace_back("y");
  return names;
}

/// Checks the shared-arity invariant; throws ValidationError.
inline void validate(const Dataset& ds) {
  if (ds.column_names.size() != ds.n_inputs + 1)
    throw ValidationError("dataset has " + std::to_string(ds.column_names.size()) +
                          " column names for " + std::to_string(ds.n_inputs) + " inputs");
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (ds.records[i].inputs.size() != ds.n_inputs)
      throw ValidationError("record " + std::to_string(i) + " has arity " +
                            std::to_string(ds.records[i].inputs.size()) + ", expected " +
                            std::to_string(ds.n_inputs));
  }
}

inline Dataset make_dataset(std::vector<Record> records, std::vector<std::string> names) {
  if (names.empty()) throw ValidationError("dataset needs at least a decision column");
  Dataset ds{std::move(records), names.size() - 1, std::move(names)};
  validate(ds);
  return ds;
}

/// Raw (unnormalized) hydrocyclone records: stream flag is 0 or 1, decision
/// is a percentage.
inline void validate_hydrocyclone(const Dataset& ds) {
  validate(ds);
  if (ds.n_inputs != 4) throw ValidationError("hydrocyclone data needs exactly 4 inputs");
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    const double flag = r.inputs[kStreamFlagColumn];
    if (flag != 0.0 && flag != 1.0)
      throw ValidationError("record " + std::to_string(i) + ": stream flag must be 0 or 1");
    if (!(r.decision >= 0.0 && r.decision <= 100.0))
      throw ValidationError("record " + std::to_string(i) + ": decision outside [0, 100]");
  }
}

// ---------------------------------------------------------------------------
// Normalization

struct ColumnRange {
  double min = 0.0;
  double max = 0.0;

  bool constant() const { return max == min; }
  double span() const { return max - min; }

  double normalize(double v) const { return constant() ? 0.0 : (v - min) / span(); }
  double denormalize(double v) const { return constant() ? min : min + v * span(); }

  bool operator==(const ColumnRange&) const = default;
};

/// Per-column min-max ranges fitted on a training set.
struct NormalizationSpec {
  std::vector<ColumnRange> inputs;
  ColumnRange decision;

  std::size_t n_inputs() const { return inputs.size(); }

  Record normalize(const Record& r) const {
    Record out{std::vector<double>(r.inputs.size()), decision.normalize(r.decision)};
    for (std::size_t j = 0; j < r.inputs.size(); ++j) out.inputs[j] = inputs[j].normalize(r.inputs[j]);
    return out;
  }

  Record denormalize(const Record& r) const {
    Record out{std::vector<double>(r.inputs.size()), decision.denormalize(r.decision)};
    for (std::size_t j = 0; j < r.inputs.size(); ++j)
      out.inputs[j] = inputs[j].denormalize(r.inputs[j]);
    return out;
  }

  /// Applies the spec to another dataset (e.g. test data); values may fall
  /// outside [0, 1].
  Dataset apply(const Dataset& ds) const {
    check_arity(ds);
    Dataset out{{}, ds.n_inputs, ds.column_names};
    out.records.reserve(ds.size());
    for (const auto& r : ds.records) out.records.push_back(normalize(r));
    return out;
  }

  Dataset invert(const Dataset& ds) const {
    check_arity(ds);
    Dataset out{{}, ds.n_inputs, ds.column_names};
    out.records.reserve(ds.size());
    for (const auto& r : ds.records) out.records.push_back(denormalize(r));
    return out;
  }

  bool operator==(const NormalizationSpec&) const = default;

 private:
  void check_arity(const Dataset& ds) const {
    if (ds.n_inputs != inputs.size())
      throw ValidationError("normalization spec has " + std::to_string(inputs.size()) +
                            " inputs, dataset has " + std::to_string(ds.n_inputs));
  }
};

inline NormalizationSpec fit_normalization(const Dataset& ds) {
  if (ds.empty()) throw ValidationError("cannot normalize an empty dataset");
  validate(ds);
  NormalizationSpec spec;
  const auto& first = ds.records.front();
  spec.inputs.resize(ds.n_inputs);
  for (std::size_t j = 0; j < ds.n_inputs; ++j) spec.inputs[j] = {first.inputs[j], first.inputs[j]};
  spec.decision = {first.decision, first.decision};
  for (const auto& r : ds.records) {
    for (std::size_t j = 0; j < ds.n_inputs; ++j) {
      spec.inputs[j].min = std::min(spec.inputs[j].min, r.inputs[j]);
      spec.inputs[j].max = std::max(spec.inputs[j].max, r.inputs[j]);
    }
    spec.decision.min = std::min(spec.decision.min, r.decision);
    spec.decision.max = std::max(spec.decision.max, r.decision);
  }
  return spec;
}

/// Min-max scales every non-constant column to [0, 1]; constant columns map
/// to 0.
inline std::pair<Dataset, NormalizationSpec> normalize(const Dataset& ds) {
  auto spec = fit_normalization(ds);
  return {spec.apply(ds), std::move(spec)};
}

// ---------------------------------------------------------------------------
// Splitting

/// Seeded uniform shuffle; the first n_train shuffled records form the
/// training set and the next n_test the test set. Original order is kept
/// within each part's shuffled sequence.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train, std::size_t n_test,
                                         std::uint64_t seed) {
  if (n_train + n_test > ds.size())
    throw ValidationError("split requests " + std::to_string(n_train + n_test) + " records but only " +
                          std::to_string(ds.size()) + " are available");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  Dataset train{{}, ds.n_inputs, ds.column_names};
  Dataset test{{}, ds.n_inputs, ds.column_names};
  train.records.reserve(n_train);
  test.records.reserve(n_test);
  for (std::size_t i = 0; i < n_train; ++i) train.records.push_back(ds.records[order[i]]);
  for (std::size_t i = n_train; i < n_train + n_test; ++i) test.records.push_back(ds.records[order[i]]);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

/// Parses comma-separated data with one header row; the last column is the
/// decision. `source` names the input in error messages. Data rows are
/// numbered from 1 (the header is not counted).
inline Dataset parse_csv(std::istream& in, const std::string& source = "<csv>") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ValidationError(source + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto f : detail::split_fields(line)) names.emplace_back(f);
  if (names.size() < 2)
    throw ValidationError(source + ": need at least 2 columns, found " + std::to_string(names.size()));

  Dataset ds{{}, names.size() - 1, names};
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != names.size())
      throw ValidationError(source + ": row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                            ") has " + std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(names.size()));
    Record rec;
    rec.inputs.reserve(ds.n_inputs);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_real(fields[c]);
      if (!v)
        throw ValidationError(source + ": row " + std::to_string(row) + " (line " +
                              std::to_string(line_no) + "), column '" + names[c] +
                              "': not a number: '" + std::string(fields[c]) + "'");
      if (c + 1 < fields.size())
        rec.inputs.push_back(*v);
      else
        rec.decision = *v;
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

inline Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

/// Writes values in shortest round-trip form, so load_csv(write_csv(ds)) == ds.
inline void write_csv(const Dataset& ds, std::ostream& out) {
  validate(ds);
  for (std::size_t c = 0; c < ds.column_names.size(); ++c)
    out << (c ? "," : "") << ds.column_names[c];
  out << '\n';
  for (const auto& r : ds.records) {
    for (double v : r.inputs) out << format_exact(v) << ',';
    out << format_exact(r.decision) << '\n';
  }
}

inline void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(ds, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace sonfis
