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

// Benchmark driver behind the command-line tool.

#ifndef SHIFT_INDEX_BENCH_HPP_
#define SHIFT_INDEX_BENCH_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shift_index/cost.hpp"
#include "shift_index/data_io.hpp"
#include "shift_index/models.hpp"
#include "shift_index/search.hpp"
#include "shift_index/shift_table.hpp"

namespace shift_index {

enum class TableChoice : std::uint8_t { kNone, kRange, kMid };

std::string_view table_choice_name(TableChoice choice);
TableChoice parse_table_choice(std::string_view name);  // none, range, mid

// Number of partitions for a compression ratio: max(1, floor(n / ratio)).
std::size_t partitions_for_ratio(std::size_t n, double ratio);

template <KeyType Key>
struct BuiltIndex {
    AnyModel<Key> model;
    std::variant<NoTable, RangeTable, MidTable> table;
    double model_build_ms = 0.0;
    double table_build_ms = 0.0;

    [[nodiscard]] std::size_t table_size() const;
    [[nodiscard]] unsigned entry_bits() const;
    [[nodiscard]] std::size_t table_bytes() const;
};

// Range with ratio 1 builds the full table; ratio > 1 a compressed one.
// Non-monotone models get a hint-only range table.
template <KeyType Key>
BuiltIndex<Key> build_index(const SortedKeyColumn<Key>& column, ModelKind kind, TableChoice table, double m_ratio,
                            const ModelParams& params = {}, const BuildOptions& options = {});

// Also accepts a model fitted elsewhere.
template <KeyType Key>
BuiltIndex<Key> build_index(const SortedKeyColumn<Key>& column, AnyModel<Key> model, TableChoice table,
                            double m_ratio, const BuildOptions& options = {});

template <KeyType Key>
Rank lookup(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column, Key q, const SearchConfig& config = {});

// Error of the first probe position against the true lower bound:
// the prediction (no table), the window midpoint lo + floor(len / 2)
// (range), or the corrected start (mid).
struct ErrorStats {
    double mean_abs = 0.0;
    double mean_log2 = 0.0;  // mean of log2(|error| + 1)
};

template <KeyType Key>
ErrorStats error_stats(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column, std::span<const Key> queries);

struct TimingStats {
    double mean_ns = 0.0;
    double p50_ns = 0.0;
    double p99_ns = 0.0;
};

struct BenchRow {
    std::string dataset;
    std::string model;
    std::string table;
    std::size_t m = 0;
    unsigned entry_bits = 0;
    std::size_t table_bytes = 0;
    double build_ms = 0.0;
    double mean_ns = 0.0;
    double p50_ns = 0.0;
    double p99_ns = 0.0;
    double mean_abs_error = 0.0;
    double mean_log2_error = 0.0;
    double probes_per_lookup = 0.0;
    std::size_t lookups = 0;
    double correct_pct = 0.0;
};

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);
std::string bench_csv(const std::vector<BenchRow>& rows);

struct BenchConfig {
    std::string dataset = "keys";
    ModelKind model = ModelKind::kInterpolation;
    ModelParams params;
    TableChoice table = TableChoice::kRange;
    double m_ratio = 1.0;
    WorkloadMode workload = WorkloadMode::kExistingKeys;
    std::size_t lookups = 100000;
    std::size_t warmup = 10000;
    unsigned repetitions = 3;
    SearchConfig search;
    std::uint64_t seed = 42;
    bool baselines = true;
    bool percentiles = true;
    std::size_t verify_sample = 10000;
    BuildOptions build;
};

// One row for the configured index, then "bs" and "is" baseline rows.
template <KeyType Key>
std::vector<BenchRow> run_bench(const SortedKeyColumn<Key>& column, const BenchConfig& config);

// Row for an index that is already built.
template <KeyType Key>
BenchRow bench_index(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column, std::span<const Key> queries,
                     const BenchConfig& config);

// "bs" (binary search over the whole array) and "is" (interpolation search)
// rows over the same queries.
template <KeyType Key>
std::vector<BenchRow> run_baselines(const SortedKeyColumn<Key>& column, std::span<const Key> queries,
                                    const BenchConfig& config);

// Rows "R-1", then "R-X" and "S-X" for each ratio X. Errors are measured
// over every indexed key, latencies over the configured workload.
template <KeyType Key>
std::vector<BenchRow> run_sweep(const SortedKeyColumn<Key>& column, std::span<const double> ratios,
                                const BenchConfig& config);

struct TuneConfig {
    TunerConfig tuner;
    BenchConfig bench;
    std::size_t curve_queries = 20000;
};

struct TuneReport {
    std::string model;
    std::size_t n = 0;
    CostProfile profile;
    double estimated_error = 0.0;  // NaN when the table has no exact windows
    TuningDecision decision;
    double measured_model_only_ns = 0.0;
    double measured_with_table_ns = 0.0;

    [[nodiscard]] bool measured_table_faster() const { return measured_with_table_ns < measured_model_only_ns; }
    [[nodiscard]] bool agrees() const { return decision.use_table == measured_table_faster(); }
};

// Builds the full table, measures (or reuses) the cost profile, applies the
// tuning rule and times both configurations as a confirmation run.
template <KeyType Key>
TuneReport run_tune(const SortedKeyColumn<Key>& column, const TuneConfig& config,
                    const std::optional<CostProfile>& profile = std::nullopt);

std::string format_tune_report(const TuneReport& report);

// Aggregate lookups per second with `readers` threads sharing one index.
template <KeyType Key>
double run_throughput(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column, std::span<const Key> queries,
                      unsigned readers, const SearchConfig& config = {});

// Best effort: restrict the calling thread to the CPU it is running on.
bool pin_current_thread();

}  // namespace shift_index

#endif  // SHIFT_INDEX_BENCH_HPP_
