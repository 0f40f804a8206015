// SPDX-License-Identifier: Apache-2.0
//
// Trace files: one CSV per (method, seed) with a fixed header, an aggregate
// CSV of per-iteration means across seeds, and a JSON sidecar per run
// directory.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dro/optimizer.hpp"

namespace dro {

inline constexpr std::string_view kTraceHeader =
    "t,M,w,W,wall_ms,robust_train,erm_train,test_err,alpha,lambda,grad_norm";

/// Reals are printed with 17 significant digits so parsing restores them exactly.
void write_trace(std::ostream& out, const std::vector<TraceRow>& rows);
void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows);

/// Throws DataError on a wrong header or malformed row.
std::vector<TraceRow> read_trace(std::istream& in);
std::vector<TraceRow> read_trace(const std::filesystem::path& path);

struct AggregateRow {
  std::string method;
  TraceRow mean;
  std::size_t runs = 0;  // traces that reached this t
};

/// Per-method, per-t arithmetic mean over the given traces. Rows are grouped
/// by method in first-appearance order and by t ascending within a method.
/// A t reached by only some traces is averaged over those.
std::vector<AggregateRow> aggregate(const std::vector<RunTrace>& traces);

void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);

/// Git blob object id ("blob <size>\0" + content, SHA-1) as 40 hex digits.
std::string git_blob_hash(std::string_view content);
std::string git_blob_hash_file(const std::filesystem::path& path);

}  // namespace dro
