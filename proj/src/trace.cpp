// SPDX-License-Identifier: Apache-2.0
#include "dro/trace.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dro/errors.hpp"

namespace dro {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_row(std::ostream& out, const TraceRow& r) {
  out << r.t << ',' << r.m << ',' << fmt(r.w) << ',' << fmt(r.W) << ',' << fmt(r.wall_ms) << ','
      << fmt(r.robust_train) << ',' << fmt(r.erm_train) << ',' << fmt(r.test_err) << ',' << fmt(r.alpha) << ','
      << fmt(r.lambda) << ',' << fmt(r.grad_norm);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

double parse_real(const std::string& field, std::size_t line) {
  // strtod accepts nan and inf, which %.17g emits.
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw DataError("trace line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& field, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError("trace line " + std::to_string(line) + ": bad integer '" + field + "'");
  }
  return v;
}

}  // namespace

void write_trace(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << kTraceHeader << '\n';
  for (const TraceRow& r : rows) {
    write_row(out, r);
    out << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  auto out = open_out(path);
  write_trace(out, rows);
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<TraceRow> read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw DataError("trace header mismatch");
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw DataError("trace line " + std::to_string(lineno) + ": expected 11 fields");
    TraceRow r;
    r.t = parse_count(f[0], lineno);
    r.m = parse_count(f[1], lineno);
    r.w = parse_real(f[2], lineno);
    r.W = parse_real(f[3], lineno);
    r.wall_ms = parse_real(f[4], lineno);
    r.robust_train = parse_real(f[5], lineno);
    r.erm_train = parse_real(f[6], lineno);
    r.test_err = parse_real(f[7], lineno);
    r.alpha = parse_real(f[8], lineno);
    r.lambda = parse_real(f[9], lineno);
    r.grad_norm = parse_real(f[10], lineno);
    rows.push_back(r);
  }
  return rows;
}

std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_trace(in);
}

std::vector<AggregateRow> aggregate(const std::vector<RunTrace>& traces) {
  std::vector<std::string> methods;
  std::map<std::string, std::map<std::size_t, std::vector<const TraceRow*>>> groups;
  for (const RunTrace& tr : traces) {
    if (!groups.count(tr.method)) methods.push_back(tr.method);
    auto& by_t = groups[tr.method];
    for (const TraceRow& r : tr.rows) by_t[r.t].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const std::string& method : methods) {
    for (const auto& [t, rows] : groups[method]) {
      AggregateRow a;
      a.method = method;
      a.runs = rows.size();
      a.mean.t = t;
      double m = 0.0;
      for (const TraceRow* r : rows) {
        m += static_cast<double>(r->m);
        a.mean.w += r->w;
        a.mean.W += r->W;
        a.mean.wall_ms += r->wall_ms;
        a.mean.robust_train += r->robust_train;
        a.mean.erm_train += r->erm_train;
        a.mean.test_err += r->test_err;
        a.mean.alpha += r->alpha;
        a.mean.lambda += r->lambda;
        a.mean.grad_norm += r->grad_norm;
      }
      const double k = static_cast<double>(rows.size());
      a.mean.m = static_cast<std::size_t>(std::llround(m / k));
      a.mean.w /= k;
      a.mean.W /= k;
      a.mean.wall_ms /= k;
      a.mean.robust_train /= k;
      a.mean.erm_train /= k;
      a.mean.test_err /= k;
      a.mean.alpha /= k;
      a.mean.lambda /= k;
      a.mean.grad_norm /= k;
      out.push_back(a);
    }
  }
  return out;
}

void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  auto out = open_out(path);
  out << "method," << kTraceHeader << ",runs\n";
  for (const AggregateRow& a : rows) {
    out << a.method << ',';
    write_row(out, a.mean);
    out << ',' << a.runs << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::string git_blob_hash(std::string_view content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw NumericalError("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw NumericalError("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string git_blob_hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return git_blob_hash(ss.str());
}

}  // namespace dro
