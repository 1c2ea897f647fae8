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

#include "shift_index/bench.hpp"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace shift_index {

namespace {

using detail::Clock;
using detail::elapsed_ns;

template <KeyType Key, class Fn>
decltype(auto) with_index(const BuiltIndex<Key>& index, Fn&& fn) {
    return std::visit([&](const auto& model, const auto& table) -> decltype(auto) { return fn(model, table); },
                      index.model, index.table);
}

template <KeyType Key, class Model, class Table>
std::size_t first_probe(const Model& model, const Table& table, std::size_t n, Key q) {
    const double pos = model.position(q);
    const std::size_t predicted = clamp_index(pos, n);
    if constexpr (std::is_same_v<Table, RangeTable>) {
        const Window w = table.window(table.partition_of(pos, predicted), predicted);
        return w.lo + w.length() / 2;
    } else if constexpr (std::is_same_v<Table, MidTable>) {
        return table.start(table.partition_of(pos, predicted), predicted);
    } else {
        return predicted;
    }
}

struct ErrorAccumulator {
    double abs_sum = 0.0;
    double log_sum = 0.0;
    std::size_t count = 0;
    void add(std::size_t truth, std::size_t guess) {
        const double e = truth > guess ? static_cast<double>(truth - guess) : static_cast<double>(guess - truth);
        abs_sum += e;
        log_sum += std::log2(e + 1.0);
        ++count;
    }
    [[nodiscard]] ErrorStats stats() const {
        if (count == 0) return {};
        return {abs_sum / static_cast<double>(count), log_sum / static_cast<double>(count)};
    }
};

// Errors over every stored key; the true rank is known without a search.
template <KeyType Key>
ErrorStats error_stats_all_keys(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column) {
    return with_index(index, [&](const auto& model, const auto& table) {
        ErrorAccumulator acc;
        const auto keys = column.keys();
        std::size_t rank = 0;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (i == 0 || keys[i] != keys[i - 1]) rank = i;
            acc.add(rank, first_probe(model, table, keys.size(), keys[i]));
        }
        return acc.stats();
    });
}

double clock_overhead_ns() {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
        const auto a = Clock::now();
        const auto b = Clock::now();
        best = std::min(best, elapsed_ns(a, b));
    }
    return best;
}

// Each query is offset by (previous result & 0) through an opaque zero, so a
// lookup cannot start before the previous one has finished.
template <KeyType Key, class Fn>
TimingStats time_lookups(std::span<const Key> queries, Fn&& fn, const BenchConfig& config) {
    const std::uint64_t zero = detail::opaque_zero();
    std::size_t sink = 0;
    for (std::size_t i = 0; i < config.warmup; ++i) {
        sink = fn(static_cast<Key>(queries[i % queries.size()] + (sink & zero)));
    }
    TimingStats out;
    double best = std::numeric_limits<double>::infinity();
    for (unsigned rep = 0; rep < std::max(1U, config.repetitions); ++rep) {
        const auto t0 = Clock::now();
        for (Key q : queries) sink = fn(static_cast<Key>(q + (sink & zero)));
        const auto t1 = Clock::now();
        best = std::min(best, elapsed_ns(t0, t1));
    }
    detail::check_resolution(best);
    out.mean_ns = best / static_cast<double>(queries.size()) + static_cast<double>(sink & zero);
    if (config.percentiles) {
        // Individually timed; the clock's own overhead is subtracted.
        const double overhead = clock_overhead_ns();
        std::vector<double> each(queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const auto a = Clock::now();
            sink = fn(static_cast<Key>(queries[i] + (sink & zero)));
            const auto b = Clock::now();
            each[i] = std::max(0.0, elapsed_ns(a, b) - overhead);
        }
        auto pct = [&](double p) {
            const auto k = static_cast<std::size_t>(p * static_cast<double>(each.size() - 1));
            std::nth_element(each.begin(), each.begin() + static_cast<std::ptrdiff_t>(k), each.end());
            return each[k];
        };
        out.p50_ns = pct(0.50);
        out.p99_ns = pct(0.99);
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

template <KeyType Key, class Fn>
BenchRow baseline_row(const SortedKeyColumn<Key>& column, std::span<const Key> queries, const BenchConfig& config,
                      std::string name, Fn&& search, std::size_t (*guess)(const SortedKeyColumn<Key>&, Key)) {
    const auto keys = column.keys();
    BenchRow row;
    row.dataset = config.dataset;
    row.model = std::move(name);
    row.table = "none";
    row.lookups = queries.size();
    const auto t = time_lookups(queries, [&](Key q) { return search(keys, q, NoProbes{}); }, config);
    row.mean_ns = t.mean_ns;
    row.p50_ns = t.p50_ns;
    row.p99_ns = t.p99_ns;
    ErrorAccumulator acc;
    ProbeCounter probes;
    std::size_t ok = 0;
    const std::size_t verify = std::min(config.verify_sample, queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const Rank truth = lower_bound_oracle(column, queries[i]);
        acc.add(truth, guess(column, queries[i]));
        const Rank got = search(keys, queries[i], probes);
        if (i < verify && got == truth) ++ok;
    }
    const auto e = acc.stats();
    row.mean_abs_error = e.mean_abs;
    row.mean_log2_error = e.mean_log2;
    row.probes_per_lookup = static_cast<double>(probes.count) / static_cast<double>(queries.size());
    row.correct_pct = verify ? 100.0 * static_cast<double>(ok) / static_cast<double>(verify) : 100.0;
    return row;
}

template <KeyType Key>
std::size_t middle_guess(const SortedKeyColumn<Key>& column, Key) {
    return column.size() / 2;
}

template <KeyType Key>
std::size_t interpolation_guess(const SortedKeyColumn<Key>& column, Key q) {
    return InterpolationModel<Key>::fit(column).predict(q);
}

std::string sweep_label(bool range, double ratio) {
    std::ostringstream s;
    s << (range ? "R-" : "S-") << ratio;
    return s.str();
}

}  // namespace

std::string_view table_choice_name(TableChoice choice) {
    switch (choice) {
        case TableChoice::kNone: return "none";
        case TableChoice::kRange: return "range";
        case TableChoice::kMid: return "mid";
    }
    return "?";
}

TableChoice parse_table_choice(std::string_view name) {
    for (auto c : {TableChoice::kNone, TableChoice::kRange, TableChoice::kMid}) {
        if (table_choice_name(c) == name) return c;
    }
    throw InvalidArgument("unknown table mode '" + std::string(name) + "'");
}

std::size_t partitions_for_ratio(std::size_t n, double ratio) {
    if (!(ratio >= 1.0)) throw InvalidM("m-ratio must be >= 1");
    return std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(n) / ratio));
}

template <KeyType Key>
std::size_t BuiltIndex<Key>::table_size() const {
    return std::visit(
        [](const auto& t) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(t)>, NoTable>) {
                return 0;
            } else {
                return t.size();
            }
        },
        table);
}

template <KeyType Key>
unsigned BuiltIndex<Key>::entry_bits() const {
    return std::visit(
        [](const auto& t) -> unsigned {
            if constexpr (std::is_same_v<std::decay_t<decltype(t)>, NoTable>) {
                return 0;
            } else {
                return t.entry_bits();
            }
        },
        table);
}

template <KeyType Key>
std::size_t BuiltIndex<Key>::table_bytes() const {
    return std::visit(
        [](const auto& t) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(t)>, NoTable>) {
                return 0;
            } else {
                return t.bytes();
            }
        },
        table);
}

template <KeyType Key>
BuiltIndex<Key> build_index(const SortedKeyColumn<Key>& column, AnyModel<Key> model, TableChoice table,
                            double m_ratio, const BuildOptions& options) {
    BuiltIndex<Key> index{std::move(model), NoTable{}, 0.0, 0.0};
    const std::size_t m = partitions_for_ratio(column.size(), m_ratio);
    const auto t0 = Clock::now();
    std::visit(
        [&](const auto& mdl) {
            BuildOptions opts = options;
            if (!mdl.is_monotone()) opts.allow_non_monotone = true;
            switch (table) {
                case TableChoice::kNone: break;
                case TableChoice::kRange:
                    index.table = m == column.size() ? build_full(mdl, column, opts)
                                                     : build_compressed(mdl, column, m, opts);
                    break;
                case TableChoice::kMid: index.table = build_mid(mdl, column, m, 1, opts); break;
            }
        },
        index.model);
    index.table_build_ms = elapsed_ns(t0, Clock::now()) / 1e6;
    return index;
}

template <KeyType Key>
BuiltIndex<Key> build_index(const SortedKeyColumn<Key>& column, ModelKind kind, TableChoice table, double m_ratio,
                            const ModelParams& params, const BuildOptions& options) {
    const auto t0 = Clock::now();
    auto model = fit_model(kind, column, params);
    const double fit_ms = elapsed_ns(t0, Clock::now()) / 1e6;
    auto index = build_index(column, std::move(model), table, m_ratio, options);
    index.model_build_ms = fit_ms;
    return index;
}

template <KeyType Key>
Rank lookup(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column, Key q, const SearchConfig& config) {
    return with_index(index, [&](const auto& model, const auto& table) {
        return find_lower(q, model, table, column, config);
    });
}

template <KeyType Key>
ErrorStats error_stats(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column,
                       std::span<const Key> queries) {
    return with_index(index, [&](const auto& model, const auto& table) {
        ErrorAccumulator acc;
        for (Key q : queries) acc.add(lower_bound_oracle(column, q), first_probe(model, table, column.size(), q));
        return acc.stats();
    });
}

std::string bench_csv_header() {
    return "dataset,model,table,m,entry_bits,table_bytes,build_ms,mean_ns,p50_ns,p99_ns,mean_abs_error,"
           "mean_log2_error,probes_per_lookup,lookups,correct_pct";
}

std::string bench_csv_row(const BenchRow& r) {
    std::ostringstream s;
    s << r.dataset << ',' << r.model << ',' << r.table << ',' << r.m << ',' << r.entry_bits << ',' << r.table_bytes
      << ',' << fmt(r.build_ms) << ',' << fmt(r.mean_ns) << ',' << fmt(r.p50_ns) << ',' << fmt(r.p99_ns) << ','
      << fmt(r.mean_abs_error) << ',' << fmt(r.mean_log2_error) << ',' << fmt(r.probes_per_lookup) << ','
      << r.lookups << ',' << fmt(r.correct_pct);
    return s.str();
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string out = bench_csv_header() + "\n";
    for (const auto& r : rows) out += bench_csv_row(r) + "\n";
    return out;
}

template <KeyType Key>
BenchRow bench_index(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column, std::span<const Key> queries,
                     const BenchConfig& config) {
    BenchRow row;
    row.dataset = config.dataset;
    row.model = std::string(model_kind_name(kind_of(index.model)));
    row.table = std::string(table_choice_name(std::visit(
        [](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, RangeTable>) return TableChoice::kRange;
            if constexpr (std::is_same_v<T, MidTable>) return TableChoice::kMid;
            return TableChoice::kNone;
        },
        index.table)));
    row.m = index.table_size();
    row.entry_bits = index.entry_bits();
    row.table_bytes = index.table_bytes();
    row.build_ms = index.table_build_ms;
    row.lookups = queries.size();
    with_index(index, [&](const auto& model, const auto& table) {
        const auto t = time_lookups(
            queries, [&](Key q) { return find_lower(q, model, table, column, config.search); }, config);
        row.mean_ns = t.mean_ns;
        row.p50_ns = t.p50_ns;
        row.p99_ns = t.p99_ns;
        ProbeCounter probes;
        ErrorAccumulator acc;
        std::size_t ok = 0;
        const std::size_t verify = std::min(config.verify_sample, queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const Rank truth = lower_bound_oracle(column, queries[i]);
            acc.add(truth, first_probe(model, table, column.size(), queries[i]));
            const Rank got = find_lower(queries[i], model, table, column, config.search, probes);
            if (i < verify && got == truth) ++ok;
        }
        const auto e = acc.stats();
        row.mean_abs_error = e.mean_abs;
        row.mean_log2_error = e.mean_log2;
        row.probes_per_lookup = static_cast<double>(probes.count) / static_cast<double>(queries.size());
        row.correct_pct = verify ? 100.0 * static_cast<double>(ok) / static_cast<double>(verify) : 100.0;
        return 0;
    });
    return row;
}

template <KeyType Key>
std::vector<BenchRow> run_baselines(const SortedKeyColumn<Key>& column, std::span<const Key> queries,
                                    const BenchConfig& config) {
    return {baseline_row<Key>(
                column, queries, config, "bs",
                [](std::span<const Key> k, Key q, auto&& p) { return full_binary_search(k, q, p); },
                &middle_guess<Key>),
            baseline_row<Key>(
                column, queries, config, "is",
                [](std::span<const Key> k, Key q, auto&& p) { return interpolation_search(k, q, p); },
                &interpolation_guess<Key>)};
}

template <KeyType Key>
std::vector<BenchRow> run_bench(const SortedKeyColumn<Key>& column, const BenchConfig& config) {
    const auto queries = make_workload(column, config.lookups, config.workload, config.seed);
    std::vector<BenchRow> rows;
    const auto index = build_index(column, config.model, config.table, config.m_ratio, config.params, config.build);
    rows.push_back(bench_index<Key>(index, column, queries, config));
    if (config.baselines) {
        auto base = run_baselines<Key>(column, queries, config);
        rows.insert(rows.end(), base.begin(), base.end());
    }
    return rows;
}

template <KeyType Key>
std::vector<BenchRow> run_sweep(const SortedKeyColumn<Key>& column, std::span<const double> ratios,
                                const BenchConfig& config) {
    for (double r : ratios) {
        if (!(r >= 1.0)) throw InvalidM("ratios must be >= 1");
    }
    const auto queries = make_workload(column, config.lookups, config.workload, config.seed);
    const auto model = fit_model(config.model, column, config.params);
    std::vector<BenchRow> rows;
    auto add = [&](TableChoice table, double ratio) {
        const auto index = build_index(column, model, table, ratio, config.build);
        auto row = bench_index<Key>(index, column, queries, config);
        const auto e = error_stats_all_keys(index, column);
        row.table = sweep_label(table == TableChoice::kRange, ratio);
        row.mean_abs_error = e.mean_abs;
        row.mean_log2_error = e.mean_log2;
        rows.push_back(std::move(row));
    };
    add(TableChoice::kRange, 1.0);
    for (double r : ratios) {
        if (r > 1.0) add(TableChoice::kRange, r);
    }
    for (double r : ratios) add(TableChoice::kMid, r);
    return rows;
}

template <KeyType Key>
TuneReport run_tune(const SortedKeyColumn<Key>& column, const TuneConfig& config,
                    const std::optional<CostProfile>& profile) {
    const auto& bc = config.bench;
    TuneReport report;
    report.model = std::string(model_kind_name(bc.model));
    report.n = column.size();
    const auto model = fit_model(bc.model, column, bc.params);
    const auto plain = build_index(column, model, TableChoice::kNone, 1.0, bc.build);
    const auto full = build_index(column, model, TableChoice::kRange, 1.0, bc.build);
    const auto& table = std::get<RangeTable>(full.table);
    const auto queries = make_workload(column, bc.lookups, bc.workload, bc.seed);

    if (profile) {
        report.profile = *profile;
    } else {
        const auto sizes = default_curve_sizes(column.size());
        report.profile = measure_latency_curve(column, std::span<const std::size_t>(sizes), config.curve_queries,
                                               bc.search, bc.seed + 1);
        report.profile.set_model_latency_ns(
            std::visit([&](const auto& m) { return measure_model_latency(m, std::span<const Key>(queries)); }, model));
        report.profile.set_table_lookup_latency_ns(
            measure_table_lookup_latency(table, config.curve_queries, bc.seed + 2));
    }
    report.estimated_error =
        table.exact_windows() ? estimate_error(table) : std::numeric_limits<double>::quiet_NaN();
    const double before = error_stats_all_keys(plain, column).mean_abs;
    const double after = error_stats_all_keys(full, column).mean_abs;
    report.decision = tune(table, report.profile, before, after, config.tuner);

    BenchConfig timing = bc;
    timing.percentiles = false;
    report.measured_model_only_ns = bench_index<Key>(plain, column, queries, timing).mean_ns;
    report.measured_with_table_ns = bench_index<Key>(full, column, queries, timing).mean_ns;
    return report;
}

std::string format_tune_report(const TuneReport& r) {
    std::ostringstream s;
    s << "model: " << r.model << "\n";
    s << "keys: " << r.n << "\n";
    s << "model latency: " << fmt(r.profile.model_latency_ns()) << " ns\n";
    s << "table lookup latency: " << fmt(r.profile.table_lookup_latency_ns()) << " ns\n";
    if (r.profile.measurement_noise()) s << "warning: latency curve was not monotone; isotonic fit applied\n";
    s << "mean error before correction: " << fmt(r.decision.error_before) << "\n";
    s << "mean error after correction: " << fmt(r.decision.error_after) << "\n";
    s << "estimated error (sum C^2 / 2N): " << fmt(r.estimated_error) << "\n";
    s << "estimated latency with table: " << fmt(r.decision.estimate_with_ns) << " ns\n";
    s << "estimated latency without table: " << fmt(r.decision.estimate_without_ns) << " ns\n";
    s << "decision: " << (r.decision.use_table ? "model+shift-table" : "model-only") << " (" << r.decision.reason
      << ")\n";
    s << "measured model-only: " << fmt(r.measured_model_only_ns) << " ns\n";
    s << "measured model+shift-table: " << fmt(r.measured_with_table_ns) << " ns\n";
    s << "measurement agrees: " << (r.agrees() ? "yes" : "no") << "\n";
    return s.str();
}

template <KeyType Key>
double run_throughput(const BuiltIndex<Key>& index, const SortedKeyColumn<Key>& column, std::span<const Key> queries,
                      unsigned readers, const SearchConfig& config) {
    readers = std::max(1U, readers);
    std::atomic<std::size_t> sink{0};
    const auto t0 = Clock::now();
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < readers; ++t) {
            workers.emplace_back([&] {
                std::size_t local = 0;
                for (Key q : queries) local += lookup(index, column, q, config);
                sink += local;
            });
        }
    }
    const double secs = elapsed_ns(t0, Clock::now()) / 1e9;
    return static_cast<double>(queries.size()) * readers / secs;
}

bool pin_current_thread() {
    const int cpu = sched_getcpu();
    if (cpu < 0) return false;
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu, &set);
    return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
}

#define SHIFT_INDEX_INSTANTIATE(Key)                                                                               \
    template struct BuiltIndex<Key>;                                                                               \
    template BuiltIndex<Key> build_index<Key>(const SortedKeyColumn<Key>&, ModelKind, TableChoice, double,         \
                                              const ModelParams&, const BuildOptions&);                            \
    template BuiltIndex<Key> build_index<Key>(const SortedKeyColumn<Key>&, AnyModel<Key>, TableChoice, double,     \
                                              const BuildOptions&);                                                \
    template Rank lookup<Key>(const BuiltIndex<Key>&, const SortedKeyColumn<Key>&, Key, const SearchConfig&);      \
    template ErrorStats error_stats<Key>(const BuiltIndex<Key>&, const SortedKeyColumn<Key>&,                      \
                                         std::span<const Key>);                                                    \
    template BenchRow bench_index<Key>(const BuiltIndex<Key>&, const SortedKeyColumn<Key>&, std::span<const Key>,  \
                                       const BenchConfig&);                                                        \
    template std::vector<BenchRow> run_baselines<Key>(const SortedKeyColumn<Key>&, std::span<const Key>,            \
                                                      const BenchConfig&);                                         \
    template std::vector<BenchRow> run_bench<Key>(const SortedKeyColumn<Key>&, const BenchConfig&);                \
    template std::vector<BenchRow> run_sweep<Key>(const SortedKeyColumn<Key>&, std::span<const double>,            \
                                                  const BenchConfig&);                                             \
    template TuneReport run_tune<Key>(const SortedKeyColumn<Key>&, const TuneConfig&,                              \
                                      const std::optional<CostProfile>&);                                          \
    template double run_throughput<Key>(const BuiltIndex<Key>&, const SortedKeyColumn<Key>&, std::span<const Key>, \
                                        unsigned, const SearchConfig&);

SHIFT_INDEX_INSTANTIATE(std::uint32_t)
SHIFT_INDEX_INSTANTIATE(std::uint64_t)

#undef SHIFT_INDEX_INSTANTIATE

}  // namespace shift_index
