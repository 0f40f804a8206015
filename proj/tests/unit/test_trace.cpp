#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "dro/errors.hpp"
#include "dro/rng.hpp"
#include "dro/trace.hpp"

using namespace dro;
namespace fs = std::filesystem;

TEST_SUITE("trace") {

namespace {

TraceRow random_row(Rng& rng, std::size_t t) {
  TraceRow r;
  r.t = t;
  r.m = rng.below(100000);
  r.w = rng.uniform() * 1e6;
  r.W = std::exp(rng.uniform(-700.0, 700.0));
  r.wall_ms = rng.uniform();
  r.robust_train = rng.normal() * 1e-300;
  r.erm_train = rng.normal();
  r.test_err = rng.uniform();
  r.alpha = rng.normal() * 1e300;
  r.lambda = -rng.normal();
  r.grad_norm = std::nextafter(rng.uniform(), 2.0);
  return r;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

TEST_CASE("header is fixed") {
  std::ostringstream os;
  write_trace(os, {});
  CHECK(os.str() == "t,M,w,W,wall_ms,robust_train,erm_train,test_err,alpha,lambda,grad_norm\n");
}

TEST_CASE("malformed traces are rejected") {
  std::istringstream wrong("t,M,w\n1,2,3\n");
  CHECK_THROWS_AS(read_trace(wrong), DataError);
  std::istringstream short_row(std::string(kTraceHeader) + "\n1,2,3\n");
  CHECK_THROWS_AS(read_trace(short_row), DataError);
  std::istringstream bad_number(std::string(kTraceHeader) + "\n1,2,3,4,5,6,7,8,9,10,x\n");
  CHECK_THROWS_AS(read_trace(bad_number), DataError);
  CHECK_THROWS_AS(read_trace(fs::path("/nonexistent/trace.csv")), DataError);
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  const fs::path p = fs::temp_directory_path() / "dro_trace_hash.txt";
  std::ofstream(p, std::ios::binary) << "hello\n";
  CHECK(git_blob_hash_file(p) == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("property: trace files round-trip exactly") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TraceRow> rows;
    for (std::size_t t = 0; t < 50; ++t) rows.push_back(random_row(rng, t));
    rows[3].test_err = std::numeric_limits<double>::quiet_NaN();
    rows[4].alpha = std::numeric_limits<double>::infinity();
    rows[5].lambda = -std::numeric_limits<double>::infinity();
    rows[6].robust_train = -0.0;
    rows[7].grad_norm = std::numeric_limits<double>::denorm_min();
    const fs::path p = fs::temp_directory_path() / "dro_trace_roundtrip.csv";
    write_trace(p, rows);
    const auto back = read_trace(p);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(same_values(rows[i], back[i]));
      CHECK(same_bits(rows[i].wall_ms, back[i].wall_ms));
    }
  }
}

TEST_CASE("property: aggregate rows are exact per-t means") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RunTrace> traces;
    const std::size_t seeds = 1 + rng.below(6);
    for (const char* method : {"dssd", "full"}) {
      for (std::size_t s = 0; s < seeds; ++s) {
        RunTrace tr;
        tr.method = method;
        const std::size_t len = 5 + rng.below(10);
        for (std::size_t t = 0; t < len; ++t) tr.rows.push_back(random_row(rng, t));
        traces.push_back(std::move(tr));
      }
    }
    const auto agg = aggregate(traces);
    std::size_t expect_rows = 0;
    for (const char* method : {"dssd", "full"}) {
      std::size_t longest = 0;
      for (const RunTrace& tr : traces) {
        if (tr.method == method) longest = std::max(longest, tr.rows.size());
      }
      expect_rows += longest;
    }
    CHECK(agg.size() == expect_rows);
    for (const AggregateRow& a : agg) {
      double sum_w = 0.0, sum_r = 0.0, sum_e = 0.0, sum_m = 0.0;
      std::size_t runs = 0;
      for (const RunTrace& tr : traces) {
        if (tr.method != a.method || tr.rows.size() <= a.mean.t) continue;
        const TraceRow& r = tr.rows[a.mean.t];
        sum_w += r.W;
        sum_r += r.robust_train;
        sum_e += r.erm_train;
        sum_m += static_cast<double>(r.m);
        ++runs;
      }
      const double n = static_cast<double>(runs);
      CHECK(a.runs == runs);
      CHECK(a.mean.W == sum_w / n);
      CHECK(a.mean.robust_train == sum_r / n);
      CHECK(a.mean.erm_train == sum_e / n);
      CHECK(std::abs(static_cast<double>(a.mean.m) - sum_m / n) <= 0.5);
    }
    CHECK(agg.front().method == "dssd");
    CHECK(agg.back().method == "full");
  }
}

}  // TEST_SUITE
