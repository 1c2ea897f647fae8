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

#ifndef SHIFT_INDEX_SEARCH_HPP_
#define SHIFT_INDEX_SEARCH_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>

#include "shift_index/core.hpp"
#include "shift_index/models.hpp"
#include "shift_index/shift_table.hpp"

namespace shift_index {

enum class UnboundedSearch : std::uint8_t { kLinear, kExponential };

struct SearchConfig {
    // Windows shorter than this are scanned linearly, longer ones bisected.
    std::size_t linear_to_binary_threshold = 8;
    // Strategy when only a start point is known.
    UnboundedSearch last_mile_unbounded = UnboundedSearch::kExponential;
};

// Probe policies: called once per key comparison.
struct NoProbes {
    void operator()() const noexcept {}
};
struct ProbeCounter {
    std::size_t count = 0;
    void operator()() noexcept { ++count; }
};

struct NoTable {};
inline constexpr NoTable kNoTable{};

// First index in [first, last) whose key is >= q, or last.
template <KeyType Key, class Probe = NoProbes>
Rank lower_bound_in(std::span<const Key> keys, std::size_t first, std::size_t last, Key q, Probe&& probe = Probe{}) {
    std::size_t count = last - first;
    while (count > 0) {
        const std::size_t step = count / 2;
        const std::size_t mid = first + step;
        probe();
        if (keys[mid] < q) {
            first = mid + 1;
            count -= step + 1;
        } else {
            count = step;
        }
    }
    return first;
}

// Window-local lower bound by scanning; window.hi + 1 if every key in the
// window is smaller than q.
template <KeyType Key, class Probe = NoProbes>
Rank last_mile_linear(std::span<const Key> keys, Window window, Key q, Probe&& probe = Probe{}) {
    for (std::size_t i = window.lo; i <= window.hi; ++i) {
        probe();
        if (keys[i] >= q) return i;
    }
    return window.hi + 1;
}

template <KeyType Key, class Probe = NoProbes>
Rank last_mile_binary(std::span<const Key> keys, Window window, Key q, Probe&& probe = Probe{}) {
    return lower_bound_in(keys, window.lo, window.hi + 1, q, probe);
}

// Doubles the probe distance from start until the lower bound is bracketed,
// then bisects the bracket. Exact for any start in [0, n-1].
template <KeyType Key, class Probe = NoProbes>
Rank last_mile_exponential(std::span<const Key> keys, std::size_t start, Key q, Probe&& probe = Probe{}) {
    const std::size_t n = keys.size();
    probe();
    if (keys[start] < q) {
        std::size_t prev = 0;
        std::size_t off = 1;
        while (start + off < n) {
            probe();
            if (keys[start + off] >= q) break;
            prev = off;
            off *= 2;
        }
        // keys[start + prev] < q, and keys[start + off] >= q when it exists.
        return lower_bound_in(keys, start + prev + 1, std::min(start + off, n), q, probe);
    }
    std::size_t prev = 0;
    std::size_t off = 1;
    while (off <= start) {
        probe();
        if (keys[start - off] < q) break;
        prev = off;
        off *= 2;
    }
    // keys[start - prev] >= q, and keys[start - off] < q when it exists.
    const std::size_t lo = off <= start ? start - off + 1 : 0;
    return lower_bound_in(keys, lo, start - prev, q, probe);
}

template <KeyType Key, class Probe = NoProbes>
Rank last_mile_unbounded_linear(std::span<const Key> keys, std::size_t start, Key q, Probe&& probe = Probe{}) {
    const std::size_t n = keys.size();
    std::size_t i = start;
    probe();
    if (keys[i] < q) {
        while (++i < n) {
            probe();
            if (keys[i] >= q) break;
        }
        return i;
    }
    while (i > 0) {
        probe();
        if (keys[i - 1] < q) break;
        --i;
    }
    return i;
}

namespace detail {

template <KeyType Key, class Probe>
Rank unbounded(std::span<const Key> keys, std::size_t start, Key q, const SearchConfig& config, Probe&& probe) {
    if (config.last_mile_unbounded == UnboundedSearch::kLinear) return last_mile_unbounded_linear(keys, start, q, probe);
    return last_mile_exponential(keys, start, q, probe);
}

template <KeyType Key, class Probe>
Rank bounded(std::span<const Key> keys, Window w, Key q, const SearchConfig& config, Probe&& probe) {
    if (w.length() < config.linear_to_binary_threshold) return last_mile_linear(keys, w, q, probe);
    return last_mile_binary(keys, w, q, probe);
}

// A window-local answer r is global unless it sits on an edge of the window
// and the neighbouring key says otherwise.
template <KeyType Key, class Probe>
Rank repair(std::span<const Key> keys, Window w, Rank r, Key q, const SearchConfig& config, Probe&& probe) {
    if (r == w.lo && w.lo > 0) {
        probe();
        if (keys[w.lo - 1] >= q) return unbounded(keys, w.lo - 1, q, config, probe);
    } else if (r == w.hi + 1 && r < keys.size()) {
        probe();
        if (keys[r] < q) return unbounded(keys, r, q, config, probe);
    }
    return r;
}

}  // namespace detail

// Model only: unbounded search from the prediction.
template <KeyType Key, class Model, class Probe = NoProbes>
    requires CdfModel<Model, Key>
Rank find_lower(Key q, const Model& model, NoTable, const SortedKeyColumn<Key>& column, const SearchConfig& config = {},
                Probe&& probe = Probe{}) {
    return detail::unbounded(column.keys(), model.predict(q), q, config, probe);
}

// Model + range table: bounded search in the corrected window. Windows that
// are not guaranteed (non-monotone model, m < n) are verified at their edges
// and widened by an unbounded search when the answer lies outside.
template <KeyType Key, class Model, class Probe = NoProbes>
    requires CdfModel<Model, Key>
Rank find_lower(Key q, const Model& model, const RangeTable& table, const SortedKeyColumn<Key>& column,
                const SearchConfig& config = {}, Probe&& probe = Probe{}) {
    const auto keys = column.keys();
    const double pos = model.position(q);
    const std::size_t predicted = clamp_index(pos, keys.size());
    // Both fields come from the entry of the original prediction.
    const Window w = table.window(table.partition_of(pos, predicted), predicted);
    const Rank r = detail::bounded(keys, w, q, config, probe);
    if (table.exact_windows()) return r;
    return detail::repair(keys, w, r, q, config, probe);
}

// Model + mid table: unbounded search from the corrected start point.
template <KeyType Key, class Model, class Probe = NoProbes>
    requires CdfModel<Model, Key>
Rank find_lower(Key q, const Model& model, const MidTable& table, const SortedKeyColumn<Key>& column,
                const SearchConfig& config = {}, Probe&& probe = Probe{}) {
    const double pos = model.position(q);
    const std::size_t predicted = clamp_index(pos, column.size());
    const std::size_t start = table.start(table.partition_of(pos, predicted), predicted);
    return detail::unbounded(column.keys(), start, q, config, probe);
}

// Baseline: bisection over the whole array.
template <KeyType Key, class Probe = NoProbes>
Rank full_binary_search(std::span<const Key> keys, Key q, Probe&& probe = Probe{}) {
    return lower_bound_in(keys, 0, keys.size(), q, probe);
}

// Baseline: interpolation search. Falls back to bisection after a bounded
// number of interpolation steps so skewed inputs stay O(log n).
template <KeyType Key, class Probe = NoProbes>
Rank interpolation_search(std::span<const Key> keys, Key q, Probe&& probe = Probe{}) {
    const std::size_t n = keys.size();
    probe();
    if (keys[0] >= q) return 0;
    probe();
    if (keys[n - 1] < q) return n;
    // keys[lo] < q <= keys[hi]
    std::size_t lo = 0;
    std::size_t hi = n - 1;
    for (int step = 0; step < 32 && hi - lo > 1; ++step) {
        const double frac = static_cast<double>(q - keys[lo]) / static_cast<double>(keys[hi] - keys[lo]);
        auto mid = lo + static_cast<std::size_t>(frac * static_cast<double>(hi - lo));
        mid = std::clamp(mid, lo + 1, hi - 1);
        probe();
        if (keys[mid] < q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lower_bound_in(keys, lo + 1, hi, q, probe);
}

}  // namespace shift_index

#endif  // SHIFT_INDEX_SEARCH_HPP_
