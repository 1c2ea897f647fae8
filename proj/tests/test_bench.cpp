/*
   Copyright 2026 The shift-index Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "shift_index/bench.hpp"
#include "test_util.hpp"

using namespace shift_index;

namespace {

BenchConfig quick(std::size_t lookups = 20000) {
    BenchConfig c;
    c.lookups = lookups;
    c.warmup = 1000;
    c.repetitions = 1;
    c.percentiles = false;
    return c;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

TEST_CASE("ratios to partition counts") {
    CHECK(partitions_for_ratio(1000, 1) == 1000);
    CHECK(partitions_for_ratio(1000, 4) == 250);
    CHECK(partitions_for_ratio(1000, 3) == 333);
    CHECK(partitions_for_ratio(10, 64) == 1);
    CHECK_THROWS_AS(partitions_for_ratio(10, 0.5), InvalidM);
    CHECK(parse_table_choice("mid") == TableChoice::kMid);
    CHECK_THROWS_AS(parse_table_choice("btree"), InvalidArgument);
}

TEST_CASE("dense keys with the interpolation model need no search") {
    const auto col = generate<std::uint64_t>({Family::kUden, 100000, 64, 1});
    auto cfg = quick();
    cfg.table = TableChoice::kNone;
    const auto rows = run_bench(col, cfg);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].model == "im");
    CHECK(rows[0].table == "none");
    CHECK(rows[0].mean_abs_error == 0.0);
    CHECK(rows[0].probes_per_lookup <= 2.0);
    CHECK(rows[0].correct_pct == 100.0);
    CHECK(rows[1].model == "bs");
    CHECK(rows[2].model == "is");
}

TEST_CASE("every configuration answers correctly") {
    const auto col = generate<std::uint64_t>({Family::kClusteredRealLike, 50000, 64, 2});
    const auto col32 = generate<std::uint32_t>({Family::kLogn, 50000, 32, 2});
    for (auto kind : {ModelKind::kInterpolation, ModelKind::kLinearSpline, ModelKind::kTwoLevelLinear}) {
        for (auto table : {TableChoice::kNone, TableChoice::kRange, TableChoice::kMid}) {
            for (double ratio : {1.0, 4.0, 64.0}) {
                for (auto wl : {WorkloadMode::kExistingKeys, WorkloadMode::kUniformRange, WorkloadMode::kMixed}) {
                    auto cfg = quick(5000);
                    cfg.model = kind;
                    cfg.table = table;
                    cfg.m_ratio = ratio;
                    cfg.workload = wl;
                    cfg.baselines = ratio == 1.0 && table == TableChoice::kNone;
                    for (const auto& row : run_bench(col, cfg)) REQUIRE(row.correct_pct == 100.0);
                    for (const auto& row : run_bench(col32, cfg)) REQUIRE(row.correct_pct == 100.0);
                }
            }
        }
    }
}

TEST_CASE("range row error is the window midpoint error") {
    const auto col = generate<std::uint64_t>({Family::kClusteredRealLike, 200000, 64, 3});
    const auto im = InterpolationModel<std::uint64_t>::fit(col);
    const auto t = build_full(im, col);
    auto cfg = quick(50000);
    const auto queries = make_workload(col, cfg.lookups, cfg.workload, cfg.seed);
    double sum = 0;
    for (auto q : queries) {
        const auto p = im.predict(q);
        const Window w = t.window(p, p);
        const auto truth = static_cast<double>(lower_bound_oracle(col, q));
        sum += std::abs(truth - static_cast<double>(w.lo + w.length() / 2));
    }
    const auto index = build_index(col, ModelKind::kInterpolation, TableChoice::kRange, 1.0);
    const auto row = bench_index<std::uint64_t>(index, col, queries, cfg);
    CHECK(row.mean_abs_error == doctest::Approx(sum / static_cast<double>(queries.size())));
    CHECK(row.m == col.size());
    CHECK(row.table_bytes == col.size() * 2 * row.entry_bits / 8);
    // The midpoint sits inside the window, so it never does worse than the start.
    CHECK(row.mean_abs_error <= estimate_error(t));
}

TEST_CASE("sweep shape") {
    const auto col = generate<std::uint64_t>({Family::kClusteredRealLike, 200000, 64, 4});
    const std::vector<double> ratios = {1, 2, 4, 8, 16, 64, 256, 1024};
    const auto rows = run_sweep(col, std::span<const double>(ratios), quick(10000));
    REQUIRE(rows.size() == 1 + 7 + 8);
    CHECK(rows[0].table == "R-1");
    CHECK(rows[1].table == "R-2");
    CHECK(rows[8].table == "S-1");
    CHECK(rows[15].table == "S-1024");
    const auto& r1 = rows[0];
    const auto& s1 = rows[8];
    CHECK(s1.mean_abs_error >= r1.mean_abs_error);
    CHECK(r1.entry_bits == s1.entry_bits);
    CHECK(r1.table_bytes == 2 * s1.table_bytes);
    for (std::size_t i = 9; i < rows.size(); ++i) CHECK(rows[i].mean_abs_error >= rows[i - 1].mean_abs_error);
    for (std::size_t i = 1; i < 8; ++i) CHECK(rows[i].table_bytes <= rows[i - 1].table_bytes);
    for (const auto& r : rows) CHECK(r.correct_pct == 100.0);
    CHECK_THROWS_AS(run_sweep(col, std::span<const double>(std::vector<double>{0.5}), quick()), InvalidM);
}

TEST_CASE("CSV schema and reproducibility") {
    const auto col = generate<std::uint64_t>({Family::kNorm, 50000, 64, 5});
    const std::vector<double> ratios = {1, 4};
    auto cfg = quick(10000);
    cfg.percentiles = true;
    const auto a = run_sweep(col, std::span<const double>(ratios), cfg);
    const auto b = run_sweep(col, std::span<const double>(ratios), cfg);
    const auto header = split(bench_csv_header());
    CHECK(header.size() == 15);
    CHECK(header.front() == "dataset");
    std::stringstream csv(bench_csv(a));
    std::string line;
    std::getline(csv, line);
    CHECK(line == bench_csv_header());
    while (std::getline(csv, line)) {
        const auto cells = split(line);
        REQUIRE(cells.size() == header.size());
        for (std::size_t i = 3; i < cells.size(); ++i) {
            const double v = std::stod(cells[i]);
            CHECK(std::isfinite(v));
        }
    }
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_abs_error == b[i].mean_abs_error);
        CHECK(a[i].mean_log2_error == b[i].mean_log2_error);
        CHECK(a[i].probes_per_lookup == b[i].probes_per_lookup);
        CHECK(a[i].table_bytes == b[i].table_bytes);
    }
}

TEST_CASE("tuning on easy and hard data") {
    TuneConfig cfg;
    cfg.bench = quick(20000);
    SUBCASE("dense keys stay model-only") {
        const auto col = generate<std::uint64_t>({Family::kUden, 200000, 64, 1});
        const auto r = run_tune(col, cfg);
        CHECK_FALSE(r.decision.use_table);
        CHECK(r.decision.error_before == 0.0);
        CHECK(r.estimated_error == doctest::Approx(0.5));
        CHECK(format_tune_report(r).find("decision: model-only") != std::string::npos);
    }
    SUBCASE("clustered keys get the table") {
        const auto col = generate<std::uint64_t>({Family::kClusteredRealLike, 200000, 64, 1});
        const auto r = run_tune(col, cfg);
        CHECK(r.decision.use_table);
        CHECK(r.decision.error_before > 10 * r.decision.error_after);
        CHECK(r.decision.estimate_with_ns < r.decision.estimate_without_ns);
        CHECK(r.measured_table_faster());
    }
    SUBCASE("a saved profile is reused") {
        const auto col = generate<std::uint64_t>({Family::kUspr, 50000, 64, 1});
        CostProfile p({{1, 5}, {1024, 50}}, 3, 4);
        const auto r = run_tune(col, cfg, p);
        CHECK(r.profile.points() == p.points());
        CHECK(r.profile.model_latency_ns() == 3);
    }
}

TEST_CASE("multi-reader throughput") {
    const auto col = generate<std::uint64_t>({Family::kUspr, 100000, 64, 6});
    const auto index = build_index(col, ModelKind::kInterpolation, TableChoice::kRange, 1.0);
    const auto q = make_workload(col, 20000, WorkloadMode::kMixed, 1);
    CHECK(run_throughput(index, col, std::span<const std::uint64_t>(q), 2) > 0);
}
