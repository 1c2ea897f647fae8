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

// The Shift-Table correction layer.
//
// A monotone model maps every key to a predicted index k. Keys sharing a
// prediction form partition P_k, and their true positions are a contiguous run
// of the key array. The table stores, per partition, the signed distance from
// k to the start of that run (delta) and its length (count), so a lookup can
// jump straight to a small window instead of searching around k.
//
// Two layouts are provided:
//   RangeTable  <delta, count> pairs; a bounded window per partition.
//   MidTable    one averaged delta per partition; a start point only.
// Both can use m < n partitions, in which case partition j collects the keys
// whose real-valued prediction p satisfies trunc(p * m / n) == j.

#ifndef SHIFT_INDEX_SHIFT_TABLE_HPP_
#define SHIFT_INDEX_SHIFT_TABLE_HPP_

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "shift_index/core.hpp"
#include "shift_index/models.hpp"

namespace shift_index {

enum class TableMode : std::uint8_t { kRange = 0, kMid = 1 };

// How a RangeTable count is turned into a window [start, start + extent].
enum class CountMeaning : std::uint8_t {
    kCardinality = 0,  // count = |P_k|, extent = count - 1
    kMaxOffset = 1,    // count = largest offset of a member from its start, extent = count
};

// Partition of a real-valued prediction when the table has m entries over n keys.
inline std::size_t partition_index(double position, std::size_t predicted, std::size_t m, std::size_t n) noexcept {
    if (m == n) return predicted;
    return clamp_index(position * static_cast<double>(m) / static_cast<double>(n), m);
}

// Signed integers stored at one fixed width (8, 16, 32 or 64 bits), native
// byte order in memory.
class PackedInts {
  public:
    PackedInts() = default;
    PackedInts(std::span<const std::int64_t> values, unsigned bits);
    // Interleaves: even[0], odd[0], even[1], odd[1], ...
    PackedInts(std::span<const std::int64_t> even, std::span<const std::int64_t> odd, unsigned bits);

    // Smallest width in {8, 16, 32, 64} that holds every value.
    static unsigned min_bits(std::span<const std::int64_t> values) noexcept;
    static unsigned min_bits(std::span<const std::int64_t> a, std::span<const std::int64_t> b) noexcept;

    [[nodiscard]] std::int64_t get(std::size_t i) const noexcept {
        switch (bits_) {
            case 8: return load<std::int8_t>(i);
            case 16: return load<std::int16_t>(i);
            case 32: return load<std::int32_t>(i);
            default: return load<std::int64_t>(i);
        }
    }

    // Two consecutive values with a single width dispatch.
    [[nodiscard]] std::pair<std::int64_t, std::int64_t> get_pair(std::size_t i) const noexcept {
        switch (bits_) {
            case 8: return {load<std::int8_t>(i), load<std::int8_t>(i + 1)};
            case 16: return {load<std::int16_t>(i), load<std::int16_t>(i + 1)};
            case 32: return {load<std::int32_t>(i), load<std::int32_t>(i + 1)};
            default: return {load<std::int64_t>(i), load<std::int64_t>(i + 1)};
        }
    }

    [[nodiscard]] std::vector<std::int64_t> unpack() const;
    [[nodiscard]] unsigned bits() const noexcept { return bits_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::size_t bytes() const noexcept { return storage_.size(); }

    friend bool operator==(const PackedInts&, const PackedInts&) = default;

  private:
    template <class Get>
    void pack(Get&& get);

    template <class T>
    [[nodiscard]] std::int64_t load(std::size_t i) const noexcept {
        T v;
        std::memcpy(&v, storage_.data() + i * sizeof(T), sizeof(T));
        return v;
    }

    std::vector<std::byte> storage_;
    std::size_t size_ = 0;
    unsigned bits_ = 64;
};

struct RangeEntry {
    std::int64_t delta;
    std::int64_t count;
    friend bool operator==(const RangeEntry&, const RangeEntry&) = default;
};

// Inclusive window of key positions, lo <= hi, both in [0, n-1].
struct Window {
    std::size_t lo;
    std::size_t hi;
    [[nodiscard]] std::size_t length() const noexcept { return hi - lo + 1; }
};

// Per-partition accumulation before empty partitions are filled and the
// entries packed. count == 0 marks an empty partition.
struct RawRangeEntries {
    std::vector<std::int64_t> delta;
    std::vector<std::int64_t> count;
};

// Gives each empty partition the window of the first populated partition to
// its right: count copied, delta shifted by the distance. Empty partitions
// with nothing populated to their right get a one-record window at n-1.
// Cardinality counts, m == n.
void fill_empty(RawRangeEntries& entries, std::size_t n);

class RangeTable {
  public:
    RangeTable() = default;
    // bits = 0 packs at the narrowest width that holds every field.
    RangeTable(std::span<const RangeEntry> entries, std::size_t n, CountMeaning meaning, bool exact_windows,
               unsigned bits = 0);
    RangeTable(std::span<const std::int64_t> delta, std::span<const std::int64_t> count, std::size_t n,
               CountMeaning meaning, bool exact_windows, unsigned bits = 0);

    [[nodiscard]] std::size_t size() const noexcept { return m_; }
    [[nodiscard]] std::size_t key_count() const noexcept { return n_; }
    [[nodiscard]] CountMeaning count_meaning() const noexcept { return meaning_; }
    // True when every lower bound is guaranteed to lie in [lo, hi + 1] of its
    // window (monotone model, m == n); otherwise windows are hints.
    [[nodiscard]] bool exact_windows() const noexcept { return exact_; }
    [[nodiscard]] unsigned entry_bits() const noexcept { return packed_.bits(); }
    [[nodiscard]] std::size_t bytes() const noexcept { return packed_.bytes(); }

    [[nodiscard]] RangeEntry entry(std::size_t k) const noexcept {
        const auto [d, c] = packed_.get_pair(2 * k);
        return {d, c};
    }

    [[nodiscard]] std::size_t partition_of(double position, std::size_t predicted) const noexcept {
        return partition_index(position, predicted, m_, n_);
    }

    [[nodiscard]] Window window(std::size_t partition, std::size_t predicted) const noexcept {
        const auto [d, c] = packed_.get_pair(2 * partition);
        const std::int64_t start = static_cast<std::int64_t>(predicted) + d;
        const std::int64_t end = start + (meaning_ == CountMeaning::kCardinality ? c - 1 : c);
        const std::size_t lo = clamp_index(start, n_);
        const std::size_t hi = clamp_index(end, n_);
        return {lo, hi < lo ? lo : hi};
    }

    // Shift to the middle of the window: delta + floor(length / 2).
    [[nodiscard]] std::int64_t midpoint_delta(std::size_t k) const noexcept {
        const auto e = entry(k);
        const std::int64_t length = meaning_ == CountMeaning::kCardinality ? e.count : e.count + 1;
        return e.delta + length / 2;
    }

    void reencode(unsigned bits);
    unsigned select_entry_width();

    [[nodiscard]] std::vector<RangeEntry> entries() const;
    [[nodiscard]] std::vector<std::byte> serialize() const;
    static RangeTable deserialize(std::span<const std::byte> blob);

    friend bool operator==(const RangeTable&, const RangeTable&) = default;

  private:
    PackedInts packed_;
    std::size_t m_ = 0;
    std::size_t n_ = 0;
    CountMeaning meaning_ = CountMeaning::kCardinality;
    bool exact_ = false;
};

class MidTable {
  public:
    MidTable() = default;
    // bits = 0 packs at the narrowest width that holds every delta.
    MidTable(std::span<const std::int64_t> deltas, std::size_t n, unsigned bits = 0);

    [[nodiscard]] std::size_t size() const noexcept { return m_; }
    [[nodiscard]] std::size_t key_count() const noexcept { return n_; }
    [[nodiscard]] unsigned entry_bits() const noexcept { return packed_.bits(); }
    [[nodiscard]] std::size_t bytes() const noexcept { return packed_.bytes(); }
    [[nodiscard]] std::int64_t delta(std::size_t k) const noexcept { return packed_.get(k); }

    [[nodiscard]] std::size_t partition_of(double position, std::size_t predicted) const noexcept {
        return partition_index(position, predicted, m_, n_);
    }
    // Corrected prediction, clamped to [0, n-1].
    [[nodiscard]] std::size_t start(std::size_t partition, std::size_t predicted) const noexcept {
        return clamp_index(static_cast<std::int64_t>(predicted) + packed_.get(partition), n_);
    }

    void reencode(unsigned bits);
    unsigned select_entry_width();

    [[nodiscard]] std::vector<std::int64_t> deltas() const { return packed_.unpack(); }
    [[nodiscard]] std::vector<std::byte> serialize() const;
    static MidTable deserialize(std::span<const std::byte> blob);

    friend bool operator==(const MidTable&, const MidTable&) = default;

  private:
    PackedInts packed_;
    std::size_t m_ = 0;
    std::size_t n_ = 0;
};

// Mode tag of a serialized table, read from its header.
TableMode peek_table_mode(std::span<const std::byte> blob);

struct BuildOptions {
    // Accept a model that does not declare monotonicity; the resulting Range
    // table is a hint that the search verifies.
    bool allow_non_monotone = false;
    // Worker threads for the key pass. Used only with monotone models.
    unsigned threads = 1;
    // Pack entries at the narrowest width after building.
    bool select_width = true;
};

namespace detail {

// Statistics of one run of consecutive keys that share a partition.
struct RunStats {
    std::size_t partition = 0;
    std::int64_t min_drift = 0;       // min(rank - predicted)
    std::int64_t max_offset = 0;      // max(position - predicted)
    std::int64_t drift_sum = 0;       // sum(rank - predicted)
    std::int64_t members = 0;
};

struct PartitionArrays {
    std::vector<std::int64_t> min_drift;
    std::vector<std::int64_t> max_offset;
    std::vector<std::int64_t> drift_sum;
    std::vector<std::int64_t> members;

    void merge(const RunStats& r) {
        const auto k = r.partition;
        if (!min_drift.empty()) {
            if (members[k] == 0 || r.min_drift < min_drift[k]) min_drift[k] = r.min_drift;
        }
        if (!max_offset.empty()) {
            if (members[k] == 0 || r.max_offset > max_offset[k]) max_offset[k] = r.max_offset;
        }
        if (!drift_sum.empty()) drift_sum[k] += r.drift_sum;
        members[k] += r.members;
    }
};

enum Track : unsigned { kMinDrift = 1, kMaxOffset = 2, kDriftSum = 4 };

// One pass over keys[begin, end) with a stride. Runs of equal partition are
// folded in registers; the first and last run of the slice are returned to the
// caller instead of merged, so parallel slices never write the same entry.
template <KeyType Key, class Model>
std::pair<RunStats, RunStats> scan_slice(const Model& model, std::span<const Key> keys, std::size_t begin,
                                         std::size_t end, std::size_t stride, std::size_t m, PartitionArrays& out,
                                         bool defer_edges) {
    const std::size_t n = keys.size();
    RunStats head{};
    RunStats cur{};
    bool have_cur = false;
    bool head_done = false;
    std::size_t rank = begin;
    for (std::size_t i = begin; i < end; i += stride) {
        if (i == 0 || keys[i] != keys[i - 1]) {
            rank = i;
        } else if (stride != 1 || i == begin) {
            rank = i;
            while (rank > 0 && keys[rank - 1] == keys[i]) --rank;
        }
        const double pos = model.position(keys[i]);
        const std::size_t pred = clamp_index(pos, n);
        const std::size_t part = partition_index(pos, pred, m, n);
        const std::int64_t drift = static_cast<std::int64_t>(rank) - static_cast<std::int64_t>(pred);
        const std::int64_t offset = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(pred);
        if (have_cur && part == cur.partition) {
            cur.min_drift = std::min(cur.min_drift, drift);
            cur.max_offset = std::max(cur.max_offset, offset);
            cur.drift_sum += drift;
            ++cur.members;
            continue;
        }
        if (have_cur) {
            if (defer_edges && !head_done) {
                head = cur;
            } else {
                out.merge(cur);
            }
            head_done = true;
        }
        cur = RunStats{part, drift, offset, drift, 1};
        have_cur = true;
    }
    if (!defer_edges) {
        if (have_cur) out.merge(cur);
        return {};
    }
    if (!head_done) return {cur, RunStats{}};  // a single run: tail empty
    return {head, cur};
}

template <KeyType Key, class Model>
PartitionArrays accumulate(const Model& model, const SortedKeyColumn<Key>& column, std::size_t m, unsigned track,
                           std::size_t stride, unsigned threads) {
    PartitionArrays arrays;
    arrays.members.assign(m, 0);
    if (track & kMinDrift) arrays.min_drift.assign(m, 0);
    if (track & kMaxOffset) arrays.max_offset.assign(m, 0);
    if (track & kDriftSum) arrays.drift_sum.assign(m, 0);

    const auto keys = column.keys();
    const std::size_t n = keys.size();
    if (threads <= 1 || !model.is_monotone() || n < 4 * std::size_t{threads} * stride) {
        scan_slice(model, keys, 0, n, stride, m, arrays, false);
        return arrays;
    }
    const std::size_t steps = (n + stride - 1) / stride;
    std::vector<std::pair<RunStats, RunStats>> edges(threads);
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = steps * t / threads * stride;
            const std::size_t e = std::min(n, steps * (t + 1) / threads * stride);
            workers.emplace_back([&, t, b, e] { edges[t] = scan_slice(model, keys, b, e, stride, m, arrays, true); });
        }
    }
    for (const auto& [head, tail] : edges) {
        if (head.members > 0) arrays.merge(head);
        if (tail.members > 0) arrays.merge(tail);
    }
    return arrays;
}

void fill_empty_offsets(std::vector<std::int64_t>& min_drift, std::vector<std::int64_t>& span,
                        std::span<const std::int64_t> members, std::size_t n);
std::vector<std::int64_t> mid_deltas(std::span<const std::int64_t> drift_sum, std::span<const std::int64_t> members);

}  // namespace detail

// Full table, one entry per predicted index (m = n), cardinality counts.
template <KeyType Key, class Model>
    requires CdfModel<Model, Key>
RangeTable build_full(const Model& model, const SortedKeyColumn<Key>& column, const BuildOptions& options = {}) {
    const bool monotone = model.is_monotone();
    if (!monotone && !options.allow_non_monotone) {
        throw NonMonotoneModel("range table needs a monotone model; use a mid table or allow_non_monotone");
    }
    const std::size_t n = column.size();
    if (!monotone) {
        // Members of a partition need not be adjacent; keep offsets so the
        // window still covers all of them.
        auto arrays = detail::accumulate(model, column, n, detail::kMinDrift | detail::kMaxOffset, 1, 1);
        std::vector<std::int64_t> span(n);
        for (std::size_t k = 0; k < n; ++k) span[k] = arrays.members[k] ? arrays.max_offset[k] - arrays.min_drift[k] : 0;
        detail::fill_empty_offsets(arrays.min_drift, span, arrays.members, n);
        return RangeTable(arrays.min_drift, span, n, CountMeaning::kMaxOffset, false, options.select_width ? 0 : 64);
    }
    auto arrays = detail::accumulate(model, column, n, detail::kMinDrift, 1, options.threads);
    RawRangeEntries raw{std::move(arrays.min_drift), std::move(arrays.members)};
    fill_empty(raw, n);
    return RangeTable(raw.delta, raw.count, n, CountMeaning::kCardinality, true, options.select_width ? 0 : 64);
}

// Range table over m <= n partitions. Counts are maximum offsets from the
// start of the window, so a member x with prediction p lies in
// [p + delta, p + delta + count].
template <KeyType Key, class Model>
    requires CdfModel<Model, Key>
RangeTable build_compressed(const Model& model, const SortedKeyColumn<Key>& column, std::size_t m,
                            const BuildOptions& options = {}) {
    const std::size_t n = column.size();
    if (m < 1 || m > n) throw InvalidM("m must be in [1, n]");
    const bool monotone = model.is_monotone();
    if (!monotone && !options.allow_non_monotone) {
        throw NonMonotoneModel("range table needs a monotone model; use a mid table or allow_non_monotone");
    }
    auto arrays = detail::accumulate(model, column, m, detail::kMinDrift | detail::kMaxOffset, 1, options.threads);
    std::vector<std::int64_t> span(m);
    for (std::size_t k = 0; k < m; ++k) span[k] = arrays.members[k] ? arrays.max_offset[k] - arrays.min_drift[k] : 0;
    detail::fill_empty_offsets(arrays.min_drift, span, arrays.members, n);
    return RangeTable(arrays.min_drift, span, n, CountMeaning::kMaxOffset, monotone && m == n,
                      options.select_width ? 0 : 64);
}

// Averaged-drift table: delta_k = trunc(mean(rank - predicted)) over the
// (sampled) members of partition k. Works for any model.
template <KeyType Key, class Model>
    requires CdfModel<Model, Key>
MidTable build_mid(const Model& model, const SortedKeyColumn<Key>& column, std::size_t m, std::size_t sample_every = 1,
                   const BuildOptions& options = {}) {
    const std::size_t n = column.size();
    if (m < 1 || m > n) throw InvalidM("m must be in [1, n]");
    if (sample_every < 1) throw InvalidArgument("sample_every must be >= 1");
    auto arrays = detail::accumulate(model, column, m, detail::kDriftSum, sample_every, options.threads);
    return MidTable(detail::mid_deltas(arrays.drift_sum, arrays.members), n, options.select_width ? 0 : 64);
}

}  // namespace shift_index

#endif  // SHIFT_INDEX_SHIFT_TABLE_HPP_
