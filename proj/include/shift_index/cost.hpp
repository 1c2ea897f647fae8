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

// Error and latency estimates for a range table, the L(s) search-latency
// curve they are driven by, and the rule that decides whether a model is
// worth correcting.

#ifndef SHIFT_INDEX_COST_HPP_
#define SHIFT_INDEX_COST_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "shift_index/core.hpp"
#include "shift_index/search.hpp"
#include "shift_index/shift_table.hpp"

namespace shift_index {

struct LatencyPoint {
    double s;
    double ns;
    friend bool operator==(const LatencyPoint&, const LatencyPoint&) = default;
};

class CostProfile {
  public:
    CostProfile() = default;
    // Points need strictly increasing s >= 1. A curve that decreases
    // somewhere is replaced by its non-decreasing least-squares fit and
    // measurement_noise() is set.
    CostProfile(std::vector<LatencyPoint> points, double model_latency_ns, double table_lookup_latency_ns);

    // L(s): piecewise linear in log2(s), flat below the first point,
    // extended with the last slope above the last point.
    [[nodiscard]] double latency(double s) const;

    [[nodiscard]] const std::vector<LatencyPoint>& points() const noexcept { return points_; }
    [[nodiscard]] double model_latency_ns() const noexcept { return model_ns_; }
    [[nodiscard]] double table_lookup_latency_ns() const noexcept { return table_ns_; }
    [[nodiscard]] bool measurement_noise() const noexcept { return noise_; }

    void set_model_latency_ns(double ns) noexcept { model_ns_ = ns; }
    void set_table_lookup_latency_ns(double ns) noexcept { table_ns_ = ns; }

    // "# model_latency_ns=..." and "# table_lookup_latency_ns=..." comment
    // lines, then a "s,L_ns" header and one row per point.
    [[nodiscard]] std::string to_csv() const;
    static CostProfile from_csv(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static CostProfile load(const std::filesystem::path& path);

  private:
    std::vector<LatencyPoint> points_;
    double model_ns_ = 0.0;
    double table_ns_ = 0.0;
    bool noise_ = false;
};

// Mean absolute error of midpoint-corrected predictions when queries are
// drawn uniformly from the keys: sum(C_k^2) / 2N over populated partitions.
// Needs a full table with exact windows.
double estimate_error(const RangeTable& table);

// The per-partition view: expected error C_k / 4 for each populated
// partition, in partition order.
std::vector<double> per_partition_error(const RangeTable& table);

// model + table lookup + (1/N) sum C_k L(C_k).
double estimate_latency_with(const RangeTable& table, const CostProfile& profile);
// model + (1/N) sum C_k L(max(|delta_k + C_k / 2|, 1)).
double estimate_latency_without(const RangeTable& table, const CostProfile& profile);

struct TunerConfig {
    double min_error_records = 10.0;
    double min_improvement_factor = 10.0;
};

struct TuningDecision {
    bool use_table = false;
    std::string reason;
    double error_before = 0.0;
    double error_after = 0.0;
    double estimate_with_ns = 0.0;
    double estimate_without_ns = 0.0;
};

// Model only when the model is already accurate or correction does not cut
// the error by the configured factor. Estimates are filled in when the table
// supports them and left NaN otherwise.
TuningDecision tune(const RangeTable& table, const CostProfile& profile, double mean_error_before,
                    double mean_error_after, const TunerConfig& config = {});

namespace detail {

// Reads a volatile zero; the compiler cannot fold it, so `x & opaque_zero()`
// builds a data dependency without changing x.
std::uint64_t opaque_zero() noexcept;

// Smallest observable step of steady_clock, in nanoseconds.
double clock_granularity_ns();

void check_resolution(double measured_ns);

using Clock = std::chrono::steady_clock;

inline double elapsed_ns(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::nano>(b - a).count();
}

}  // namespace detail

// Powers of two from 1 up to n, plus n itself.
std::vector<std::size_t> default_curve_sizes(std::size_t n);

// Times a bounded last-mile search over windows of s records centred on
// uniformly random positions, for each s in sizes. Queries run in a
// pre-shuffled order chained through their results.
template <KeyType Key>
CostProfile measure_latency_curve(const SortedKeyColumn<Key>& column, std::span<const std::size_t> sizes,
                                  std::size_t queries_per_size, const SearchConfig& config = {},
                                  std::uint64_t seed = 7) {
    if (queries_per_size == 0) throw InvalidArgument("queries_per_size must be >= 1");
    const auto keys = column.keys();
    const std::size_t n = keys.size();
    std::mt19937_64 rng(seed);
    std::vector<LatencyPoint> points;
    std::vector<Window> windows(queries_per_size);
    std::vector<Key> queries(queries_per_size);
    const std::uint64_t zero = detail::opaque_zero();
    std::size_t last = 0;
    for (std::size_t s : sizes) {
        if (s < 1) throw InvalidArgument("window sizes must be >= 1");
        s = std::min(s, n);
        if (s <= last) continue;
        last = s;
        for (std::size_t i = 0; i < queries_per_size; ++i) {
            const std::size_t at = rng() % n;
            const std::size_t lo = std::min(at - std::min(at, s / 2), n - s);
            windows[i] = {lo, lo + s - 1};
            queries[i] = keys[at];
        }
        std::size_t sink = 0;
        // One untimed pass, then the best of three.
        double total = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 4; ++rep) {
            const auto t0 = detail::Clock::now();
            for (std::size_t i = 0; i < queries_per_size; ++i) {
                Window w = windows[i];
                w.lo += sink & zero;
                w.hi += sink & zero;
                sink = detail::bounded(keys, w, queries[i], config, NoProbes{});
            }
            const auto t1 = detail::Clock::now();
            if (rep > 0) total = std::min(total, detail::elapsed_ns(t0, t1));
        }
        total += static_cast<double>(sink & zero);
        detail::check_resolution(total);
        points.push_back({static_cast<double>(s), total / static_cast<double>(queries_per_size)});
    }
    return CostProfile(std::move(points), 0.0, 0.0);
}

// Mean nanoseconds per model evaluation over the given queries, chained.
template <class Model, KeyType Key>
double measure_model_latency(const Model& model, std::span<const Key> queries) {
    if (queries.empty()) throw InvalidArgument("need at least one query");
    const std::uint64_t zero = detail::opaque_zero();
    std::size_t sink = 0;
    double total = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 4; ++rep) {
        const auto t0 = detail::Clock::now();
        for (Key q : queries) sink = model.predict(static_cast<Key>(q + (sink & zero)));
        const auto t1 = detail::Clock::now();
        if (rep > 0) total = std::min(total, detail::elapsed_ns(t0, t1));
    }
    total += static_cast<double>(sink & zero);
    detail::check_resolution(total);
    return total / static_cast<double>(queries.size());
}

// Mean nanoseconds of one random entry load from the table.
double measure_table_lookup_latency(const RangeTable& table, std::size_t lookups, std::uint64_t seed = 11);

}  // namespace shift_index

#endif  // SHIFT_INDEX_COST_HPP_
