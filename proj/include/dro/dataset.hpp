// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <cstdint>
#include <utility>
#include <vector>

#include "dro/rng.hpp"

namespace dro {

/// Dense row-major features with ±1 labels. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t rows, std::size_t cols, std::vector<double> features, std::vector<double> labels,
          std::vector<std::string> feature_names = {});

  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {features_.data() + i * cols_, cols_};
  }
  double label(std::size_t i) const noexcept { return labels_[i]; }
  std::span<const double> labels() const noexcept { return labels_; }
  std::span<const double> features() const noexcept { return features_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  /// New dataset made of the given rows, in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;

  /// max_n ‖x_n‖².
  double max_row_norm_sq() const;

 private:
  std::size_t cols_ = 0;
  std::vector<double> features_;
  std::vector<double> labels_;
  std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Delimited tables

enum class ColumnRole { Label, Categorical, Numeric, Ignore };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::Numeric;
};

struct TableSchema {
  std::vector<ColumnSpec> columns;     // in file order
  std::set<std::string> positive_labels;
  char delimiter = ',';                // ' ' means any run of whitespace
  bool header = false;                 // first non-skipped line names the columns
  std::string missing = "?";
  std::string skip_prefix;             // lines starting with this are ignored
};

/// Category dictionaries fitted on a training file (first-appearance order),
/// reused for held-out files so both share one feature layout.
struct TableEncoder {
  std::vector<std::size_t> categorical_columns;  // positions in the schema
  std::vector<std::map<std::string, std::size_t>> categories;
  std::vector<std::vector<std::string>> category_order;

  std::size_t width(const TableSchema& schema) const;
};

struct TableLoad {
  Dataset data;
  TableEncoder encoder;
  std::size_t dropped_missing = 0;
  std::size_t unseen_categories = 0;  // only when loading with a fixed encoder
};

TableLoad load_table(const std::filesystem::path& path, const TableSchema& schema);
TableLoad load_table(const std::filesystem::path& path, const TableSchema& schema, const TableEncoder& encoder);

/// The UCI Adult schema (15 columns, income label, "?" missing marker, "|"
/// comment lines). Continuous columns get `numeric_role` (Numeric or Ignore).
TableSchema adult_schema(ColumnRole numeric_role = ColumnRole::Numeric);

// ---------------------------------------------------------------------------
// HIV-1 protease octamers

inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr std::size_t kOctamerLength = 8;
inline constexpr std::size_t kOctamerFeatures = kOctamerLength * kAminoAcids.size();

/// Position-wise one-hot code: feature 20·i + index(sequence[i]) is 1.
std::vector<double> encode_octamer(std::string_view sequence);

struct OctamerLoad {
  Dataset data;
  std::size_t raw = 0;
  std::size_t duplicates_merged = 0;
  std::size_t conflicts_dropped = 0;  // distinct octamers seen with both labels
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Reads "OCTAMER,label" lines (label 1 or -1). Exact duplicates are merged;
/// octamers observed with both labels are dropped.
OctamerLoad load_octamers(std::span<const std::filesystem::path> paths);

// ---------------------------------------------------------------------------

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, Rng& rng);

/// Labels alternate +1, −1 (balanced); x_n = y_n·separation·u + N(0, I) with u
/// a random unit vector drawn from the same seed.
Dataset make_synthetic(std::size_t n, std::size_t d, double separation, std::uint64_t seed);

}  // namespace dro
