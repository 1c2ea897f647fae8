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

#include "shift_index/cost.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace shift_index {

namespace {

// Pool-adjacent-violators: the non-decreasing sequence closest to y in the
// least-squares sense.
std::vector<double> isotonic(const std::vector<double>& y) {
    struct Block {
        double sum;
        double weight;
    };
    std::vector<Block> blocks;
    for (double v : y) {
        blocks.push_back({v, 1.0});
        while (blocks.size() > 1) {
            const auto& b = blocks.back();
            const auto& a = blocks[blocks.size() - 2];
            if (a.sum / a.weight <= b.sum / b.weight) break;
            const Block merged{a.sum + b.sum, a.weight + b.weight};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : blocks) {
        for (int i = 0; i < static_cast<int>(b.weight); ++i) out.push_back(b.sum / b.weight);
    }
    return out;
}

double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw BadFormat("not a number: '" + std::string(s) + "'");
    return v;
}

// Calls fn(start, count) for each populated partition of a full cardinality
// table. Empty partitions repeat the window of a populated neighbour, so the
// populated ones are exactly the windows that tile [0, n) left to right.
template <class Fn>
void for_each_populated(const RangeTable& table, Fn&& fn) {
    if (table.count_meaning() != CountMeaning::kCardinality || !table.exact_windows() ||
        table.size() != table.key_count()) {
        throw WrongMode("estimates need a full range table with exact windows");
    }
    const auto n = static_cast<std::int64_t>(table.key_count());
    std::int64_t cur = 0;
    for (std::size_t k = 0; k < table.size() && cur < n; ++k) {
        const auto e = table.entry(k);
        const std::int64_t start = static_cast<std::int64_t>(k) + e.delta;
        if (start != cur || e.count <= 0) continue;
        fn(k, e);
        cur += e.count;
    }
    if (cur != n) throw WrongMode("table windows do not cover the key column");
}

}  // namespace

CostProfile::CostProfile(std::vector<LatencyPoint> points, double model_latency_ns, double table_lookup_latency_ns)
    : points_(std::move(points)), model_ns_(model_latency_ns), table_ns_(table_lookup_latency_ns) {
    if (points_.empty()) throw InvalidArgument("cost profile needs at least one point");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!(points_[i].s >= 1.0) || !std::isfinite(points_[i].ns)) throw InvalidArgument("bad latency point");
        if (i > 0 && !(points_[i].s > points_[i - 1].s)) throw InvalidArgument("window sizes must increase");
    }
    std::vector<double> y;
    for (const auto& p : points_) y.push_back(p.ns);
    if (!std::is_sorted(y.begin(), y.end())) {
        noise_ = true;
        const auto fixed = isotonic(y);
        for (std::size_t i = 0; i < points_.size(); ++i) points_[i].ns = fixed[i];
    }
}

double CostProfile::latency(double s) const {
    const double x = std::log2(std::max(s, 1.0));
    if (points_.size() == 1 || s <= points_.front().s) return points_.front().ns;
    auto at = [&](std::size_t i) { return std::log2(points_[i].s); };
    std::size_t hi = 1;
    while (hi + 1 < points_.size() && points_[hi].s < s) ++hi;
    const double x0 = at(hi - 1);
    const double x1 = at(hi);
    const double t = (x - x0) / (x1 - x0);
    return points_[hi - 1].ns + t * (points_[hi].ns - points_[hi - 1].ns);
}

std::string CostProfile::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "# model_latency_ns=" << model_ns_ << "\n";
    out << "# table_lookup_latency_ns=" << table_ns_ << "\n";
    out << "s,L_ns\n";
    for (const auto& p : points_) out << p.s << "," << p.ns << "\n";
    return out.str();
}

CostProfile CostProfile::from_csv(std::string_view text) {
    std::vector<LatencyPoint> points;
    double model_ns = 0.0;
    double table_ns = 0.0;
    bool header = false;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) continue;
            std::string_view name = line.substr(1, eq - 1);
            while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
            const double v = parse_double(line.substr(eq + 1));
            if (name == "model_latency_ns") model_ns = v;
            if (name == "table_lookup_latency_ns") table_ns = v;
            continue;
        }
        if (!header) {
            if (line != "s,L_ns") throw BadFormat("expected 's,L_ns' header");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) throw BadFormat("expected 's,L_ns' row");
        points.push_back({parse_double(line.substr(0, comma)), parse_double(line.substr(comma + 1))});
    }
    if (!header) throw BadFormat("missing 's,L_ns' header");
    return CostProfile(std::move(points), model_ns, table_ns);
}

void CostProfile::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << to_csv();
}

CostProfile CostProfile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_csv(buf.str());
}

double estimate_error(const RangeTable& table) {
    double sum = 0.0;
    for_each_populated(table, [&](std::size_t, RangeEntry e) {
        sum += static_cast<double>(e.count) * static_cast<double>(e.count);
    });
    return sum / (2.0 * static_cast<double>(table.key_count()));
}

std::vector<double> per_partition_error(const RangeTable& table) {
    std::vector<double> out;
    for_each_populated(table, [&](std::size_t, RangeEntry e) { out.push_back(static_cast<double>(e.count) / 4.0); });
    return out;
}

double estimate_latency_with(const RangeTable& table, const CostProfile& profile) {
    double sum = 0.0;
    for_each_populated(table, [&](std::size_t, RangeEntry e) {
        const auto c = static_cast<double>(e.count);
        sum += c * profile.latency(c);
    });
    return profile.model_latency_ns() + profile.table_lookup_latency_ns() +
           sum / static_cast<double>(table.key_count());
}

double estimate_latency_without(const RangeTable& table, const CostProfile& profile) {
    double sum = 0.0;
    for_each_populated(table, [&](std::size_t, RangeEntry e) {
        const auto c = static_cast<double>(e.count);
        const double drift = std::max(std::abs(static_cast<double>(e.delta) + c / 2.0), 1.0);
        sum += c * profile.latency(drift);
    });
    return profile.model_latency_ns() + sum / static_cast<double>(table.key_count());
}

TuningDecision tune(const RangeTable& table, const CostProfile& profile, double mean_error_before,
                    double mean_error_after, const TunerConfig& config) {
    TuningDecision d;
    d.error_before = mean_error_before;
    d.error_after = mean_error_after;
    d.estimate_with_ns = std::numeric_limits<double>::quiet_NaN();
    d.estimate_without_ns = std::numeric_limits<double>::quiet_NaN();
    if (table.exact_windows() && table.count_meaning() == CountMeaning::kCardinality &&
        table.size() == table.key_count()) {
        d.estimate_with_ns = estimate_latency_with(table, profile);
        d.estimate_without_ns = estimate_latency_without(table, profile);
    }
    std::ostringstream why;
    if (mean_error_before < config.min_error_records) {
        why << "model error " << mean_error_before << " < " << config.min_error_records << " records";
    } else if (mean_error_after * config.min_improvement_factor > mean_error_before) {
        why << "correction improves error by less than " << config.min_improvement_factor << "x";
    } else {
        d.use_table = true;
        why << "model error " << mean_error_before << " >= " << config.min_error_records
            << " records and correction improves it by >= " << config.min_improvement_factor << "x";
    }
    d.reason = why.str();
    return d;
}

namespace detail {

namespace {
volatile std::uint64_t g_zero = 0;
}

std::uint64_t opaque_zero() noexcept { return g_zero; }

double clock_granularity_ns() {
    static const double granularity = [] {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 64; ++i) {
            const auto a = Clock::now();
            auto b = Clock::now();
            while (b == a) b = Clock::now();
            best = std::min(best, elapsed_ns(a, b));
        }
        return best;
    }();
    return granularity;
}

void check_resolution(double measured_ns) {
    const double g = clock_granularity_ns();
    if (g > 0.01 * measured_ns) {
        throw ClockResolution("timer granularity " + std::to_string(g) + " ns exceeds 1% of the measured " +
                              std::to_string(measured_ns) + " ns; use more queries");
    }
}

}  // namespace detail

std::vector<std::size_t> default_curve_sizes(std::size_t n) {
    std::vector<std::size_t> sizes;
    for (std::size_t s = 1; s < n; s *= 2) sizes.push_back(s);
    sizes.push_back(n);
    return sizes;
}

double measure_table_lookup_latency(const RangeTable& table, std::size_t lookups, std::uint64_t seed) {
    if (lookups == 0) throw InvalidArgument("lookups must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> where(lookups);
    for (auto& k : where) k = rng() % table.size();
    const std::uint64_t zero = detail::opaque_zero();
    std::size_t sink = 0;
    // One untimed pass, then the best of three.
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 4; ++rep) {
        const auto t0 = detail::Clock::now();
        for (std::size_t k : where) {
            k += sink & zero;
            sink = table.window(k, k).lo;
        }
        const auto t1 = detail::Clock::now();
        if (rep > 0) best = std::min(best, detail::elapsed_ns(t0, t1));
    }
    best += static_cast<double>(sink & zero);
    detail::check_resolution(best);
    return best / static_cast<double>(lookups);
}

}  // namespace shift_index
