// SPDX-License-Identifier: Apache-2.0
#include "dro/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "dro/errors.hpp"
#include "dro/sampling.hpp"

namespace dro {

Dataset::Dataset(std::size_t rows, std::size_t cols, std::vector<double> features, std::vector<double> labels,
                 std::vector<std::string> feature_names)
    : cols_(cols), features_(std::move(features)), labels_(std::move(labels)), names_(std::move(feature_names)) {
  if (labels_.size() != rows || features_.size() != rows * cols) {
    throw InvariantError("dataset shape does not match its buffers");
  }
  for (double y : labels_) {
    if (y != 1.0 && y != -1.0) throw InvariantError("dataset labels must be +1 or -1");
  }
  if (!names_.empty() && names_.size() != cols) throw InvariantError("feature name count mismatch");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> f;
  std::vector<double> y;
  f.reserve(rows.size() * cols_);
  y.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= labels_.size()) throw DomainError("row index out of range");
    auto x = row(r);
    f.insert(f.end(), x.begin(), x.end());
    y.push_back(labels_[r]);
  }
  return Dataset(rows.size(), cols_, std::move(f), std::move(y), names_);
}

double Dataset::max_row_norm_sq() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) {
    double s = 0.0;
    for (double v : row(i)) s += v * v;
    best = std::max(best, s);
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  if (delimiter == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delimiter, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

double parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError(location(path, line) + ": cannot parse '" + std::string(field) + "' as a number");
  }
  return v;
}

std::size_t label_position(const TableSchema& schema) {
  std::size_t found = schema.columns.size();
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (schema.columns[i].role == ColumnRole::Label) {
      if (found != schema.columns.size()) throw DataError("schema names more than one label column");
      found = i;
    }
  }
  if (found == schema.columns.size()) throw DataError("schema has no label column");
  if (schema.positive_labels.empty()) throw DataError("schema lists no positive label value");
  return found;
}

TableLoad load_impl(const std::filesystem::path& path, const TableSchema& schema, const TableEncoder* fixed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::size_t label_col = label_position(schema);
  const std::size_t ncols = schema.columns.size();

  TableLoad out;
  if (fixed) {
    out.encoder = *fixed;
  } else {
    for (std::size_t c = 0; c < ncols; ++c) {
      if (schema.columns[c].role == ColumnRole::Categorical) out.encoder.categorical_columns.push_back(c);
    }
    out.encoder.categories.resize(out.encoder.categorical_columns.size());
    out.encoder.category_order.resize(out.encoder.categorical_columns.size());
  }
  // position in categorical list, per schema column
  std::vector<std::size_t> cat_slot(ncols, ncols);
  for (std::size_t k = 0; k < out.encoder.categorical_columns.size(); ++k) {
    cat_slot[out.encoder.categorical_columns[k]] = k;
  }

  struct Row {
    std::vector<std::string> cats;
    std::vector<double> nums;
    double y;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_pending = schema.header;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (!schema.skip_prefix.empty() && sv.starts_with(schema.skip_prefix)) continue;
    auto fields = split_fields(sv, schema.delimiter);
    if (header_pending) {
      header_pending = false;
      for (const ColumnSpec& spec : schema.columns) {
        if (std::find(fields.begin(), fields.end(), spec.name) == fields.end()) {
          throw DataError(location(path, lineno) + ": schema column '" + spec.name + "' not in header");
        }
      }
      if (fields.size() != ncols) {
        throw DataError(location(path, lineno) + ": header has " + std::to_string(fields.size()) +
                        " columns, schema has " + std::to_string(ncols));
      }
      for (std::size_t c = 0; c < ncols; ++c) {
        if (fields[c] != schema.columns[c].name) {
          throw DataError(location(path, lineno) + ": header column " + std::to_string(c) + " is '" +
                          std::string(fields[c]) + "', schema expects '" + schema.columns[c].name + "'");
        }
      }
      continue;
    }
    if (fields.size() != ncols) {
      throw DataError(location(path, lineno) + ": expected " + std::to_string(ncols) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const bool missing = std::any_of(fields.begin(), fields.end(), [&](std::string_view f) {
      return !schema.missing.empty() && f == schema.missing;
    });
    if (missing) {
      ++out.dropped_missing;
      continue;
    }
    Row r;
    r.y = schema.positive_labels.count(std::string(fields[label_col])) ? 1.0 : -1.0;
    for (std::size_t c = 0; c < ncols; ++c) {
      switch (schema.columns[c].role) {
        case ColumnRole::Categorical: r.cats.emplace_back(fields[c]); break;
        case ColumnRole::Numeric: r.nums.push_back(parse_number(fields[c], path, lineno)); break;
        default: break;
      }
    }
    if (!fixed) {
      for (std::size_t k = 0; k < r.cats.size(); ++k) {
        auto& dict = out.encoder.categories[k];
        if (dict.emplace(r.cats[k], dict.size()).second) out.encoder.category_order[k].push_back(r.cats[k]);
      }
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");

  // Layout: schema order, categorical columns expanded in place.
  std::vector<std::string> names;
  for (std::size_t c = 0; c < ncols; ++c) {
    const ColumnSpec& spec = schema.columns[c];
    if (spec.role == ColumnRole::Numeric) names.push_back(spec.name);
    if (spec.role == ColumnRole::Categorical) {
      for (const std::string& cat : out.encoder.category_order[cat_slot[c]]) names.push_back(spec.name + "=" + cat);
    }
  }
  const std::size_t width = names.size();
  std::vector<double> features(rows.size() * width, 0.0);
  std::vector<double> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double* x = features.data() + i * width;
    std::size_t offset = 0, ci = 0, ni = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      const ColumnRole role = schema.columns[c].role;
      if (role == ColumnRole::Numeric) {
        x[offset++] = rows[i].nums[ni++];
      } else if (role == ColumnRole::Categorical) {
        const std::size_t k = cat_slot[c];
        const auto& dict = out.encoder.categories[k];
        auto it = dict.find(rows[i].cats[ci++]);
        if (it != dict.end()) {
          x[offset + it->second] = 1.0;
        } else {
          ++out.unseen_categories;
        }
        offset += out.encoder.category_order[k].size();
      }
    }
    labels[i] = rows[i].y;
  }
  out.data = Dataset(rows.size(), width, std::move(features), std::move(labels), std::move(names));
  return out;
}

}  // namespace

std::size_t TableEncoder::width(const TableSchema& schema) const {
  std::size_t w = 0;
  for (const ColumnSpec& c : schema.columns) w += c.role == ColumnRole::Numeric;
  for (const auto& order : category_order) w += order.size();
  return w;
}

TableLoad load_table(const std::filesystem::path& path, const TableSchema& schema) {
  return load_impl(path, schema, nullptr);
}

TableLoad load_table(const std::filesystem::path& path, const TableSchema& schema, const TableEncoder& encoder) {
  return load_impl(path, schema, &encoder);
}

TableSchema adult_schema(ColumnRole numeric_role) {
  TableSchema s;
  const ColumnRole cat = ColumnRole::Categorical;
  s.columns = {{"age", numeric_role},
               {"workclass", cat},
               {"fnlwgt", numeric_role},
               {"education", cat},
               {"education-num", numeric_role},
               {"marital-status", cat},
               {"occupation", cat},
               {"relationship", cat},
               {"race", cat},
               {"sex", cat},
               {"capital-gain", numeric_role},
               {"capital-loss", numeric_role},
               {"hours-per-week", numeric_role},
               {"native-country", cat},
               {"income", ColumnRole::Label}};
  s.positive_labels = {">50K", ">50K."};
  s.delimiter = ',';
  s.missing = "?";
  s.skip_prefix = "|";
  return s;
}

// ---------------------------------------------------------------------------

std::vector<double> encode_octamer(std::string_view sequence) {
  if (sequence.size() != kOctamerLength) {
    throw DataError("octamer must have length 8, got " + std::to_string(sequence.size()));
  }
  std::vector<double> x(kOctamerFeatures, 0.0);
  for (std::size_t i = 0; i < kOctamerLength; ++i) {
    const auto k = kAminoAcids.find(sequence[i]);
    if (k == std::string_view::npos) {
      throw DataError("octamer position " + std::to_string(i) + " has invalid residue '" +
                      std::string(1, sequence[i]) + "'");
    }
    x[i * kAminoAcids.size() + k] = 1.0;
  }
  return x;
}

OctamerLoad load_octamers(std::span<const std::filesystem::path> paths) {
  OctamerLoad out;
  std::vector<std::string> order;
  std::unordered_map<std::string, int> label_of;  // 0 once conflicting
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view sv = trim(line);
      if (sv.empty()) continue;
      auto fields = split_fields(sv, ',');
      if (fields.size() != 2) throw DataError(location(path, lineno) + ": expected 'OCTAMER,label'");
      const std::string seq(fields[0]);
      try {
        encode_octamer(seq);
      } catch (const DataError& e) {
        throw DataError(location(path, lineno) + ": " + e.what());
      }
      const double y = parse_number(fields[1], path, lineno);
      if (y != 1.0 && y != -1.0) throw DataError(location(path, lineno) + ": label must be 1 or -1");
      ++out.raw;
      const int lab = y > 0 ? 1 : -1;
      auto [it, inserted] = label_of.emplace(seq, lab);
      if (inserted) {
        order.push_back(seq);
      } else {
        if (it->second == lab) {
          ++out.duplicates_merged;
        } else {
          it->second = 0;
        }
      }
    }
  }
  std::vector<double> f, y;
  for (const std::string& seq : order) {
    const int lab = label_of[seq];
    if (lab == 0) {
      ++out.conflicts_dropped;
      continue;
    }
    auto x = encode_octamer(seq);
    f.insert(f.end(), x.begin(), x.end());
    y.push_back(lab);
    (lab > 0 ? out.positives : out.negatives)++;
  }
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kOctamerLength; ++i) {
    for (char a : kAminoAcids) names.push_back("p" + std::to_string(i + 1) + "=" + a);
  }
  const std::size_t n = y.size();
  out.data = Dataset(n, kOctamerFeatures, std::move(f), std::move(y), std::move(names));
  return out;
}

// ---------------------------------------------------------------------------

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DomainError("test fraction must lie in (0, 1)");
  const std::size_t m = data.rows();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
  if (n_test == 0 || n_test >= m) throw DomainError("test fraction leaves an empty split");
  IndexSample pick = sample_indices(m, n_test, SamplingMode::WithoutReplacement, rng);
  std::vector<std::uint8_t> is_test(m, 0);
  for (std::size_t i : pick.indices) is_test[i] = 1;
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < m; ++i) (is_test[i] ? test : train).push_back(i);
  return {data.subset(train), data.subset(test)};
}

Dataset make_synthetic(std::size_t n, std::size_t d, double separation, std::uint64_t seed) {
  if (n == 0 || d == 0) throw DomainError("synthetic dataset needs N, d >= 1");
  Rng rng(seed);
  std::vector<double> u(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : u) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;

  std::vector<double> f(n * d), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = (i % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t k = 0; k < d; ++k) f[i * d + k] = y[i] * separation * u[k] + rng.normal();
  }
  return Dataset(n, d, std::move(f), std::move(y));
}

}  // namespace dro
