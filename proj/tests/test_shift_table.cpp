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

#include <random>

#include "shift_index/shift_table.hpp"
#include "test_util.hpp"

using namespace shift_index;
using testutil::brute_partitions;

namespace {

// Empty-partition rule applied to a brute-force table: copy the first
// populated partition on the right, shifted by the distance.
std::vector<RangeEntry> brute_full_table(const std::vector<testutil::BruteEntry>& parts, std::size_t n) {
    std::vector<RangeEntry> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (parts[k].members > 0) {
            out[k] = {parts[k].min_drift, parts[k].members};
            continue;
        }
        std::size_t j = k + 1;
        while (j < n && parts[j].members == 0) ++j;
        if (j == n) {
            out[k] = {static_cast<std::int64_t>(n - 1 - k), 1};
        } else {
            out[k] = {parts[j].min_drift + static_cast<std::int64_t>(j - k), parts[j].members};
        }
    }
    return out;
}

template <class Model, KeyType Key>
void check_full_containment(const Model& model, const std::vector<Key>& keys, const RangeTable& t) {
    SortedKeyColumn<Key> col(keys);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const double pos = model.position(keys[i]);
        const std::size_t p = clamp_index(pos, keys.size());
        const Window w = t.window(t.partition_of(pos, p), p);
        const Rank r = col.rank_at(i);
        REQUIRE(w.lo <= r);
        REQUIRE(r <= w.hi);
    }
}

}  // namespace

TEST_CASE("worked example: partition 77 and the empty partition 1") {
    const auto keys = testutil::worked_keys();
    SortedKeyColumn<std::uint64_t> col(keys);
    const auto model = testutil::worked_model();
    const auto t = build_full(model, col);
    CHECK(t.size() == 100);
    CHECK(t.entry(77) == RangeEntry{-41, 2});
    const Window w = t.window(77, 77);
    CHECK(w.lo == 36);
    CHECK(w.hi == 37);
    // Prediction 1 is empty; its pseudo entry points at record 3.
    const Window e = t.window(1, 1);
    CHECK(e.lo == 3);
    CHECK(e.hi == 3);
    CHECK(t.exact_windows());
    CHECK(t.count_meaning() == CountMeaning::kCardinality);
}

TEST_CASE("four-key example") {
    SortedKeyColumn<std::uint32_t> col({10, 20, 30, 40});
    InterpolationModel<std::uint32_t> im(0, 40, 4);
    const auto t = build_full(im, col);
    CHECK(t.entry(0) == RangeEntry{0, 1});
    CHECK(t.entry(1) == RangeEntry{-1, 1});
    CHECK(t.entry(2) == RangeEntry{-1, 1});
    CHECK(t.entry(3) == RangeEntry{-1, 2});

    // m = 2 against brute-force enumeration.
    const auto c = build_compressed(im, col, 2);
    const auto parts = brute_partitions(im, std::vector<std::uint32_t>{10, 20, 30, 40}, 2);
    for (std::size_t k = 0; k < 2; ++k) {
        REQUIRE(parts[k].members > 0);
        CHECK(c.entry(k).delta == parts[k].min_drift);
        CHECK(c.entry(k).count == parts[k].max_offset - parts[k].min_drift);
    }
}

TEST_CASE("table-slice example with 30 partitions") {
    const auto keys = testutil::worked_keys();
    SortedKeyColumn<std::uint64_t> col(keys);
    const auto model = testutil::worked_model();
    const auto t = build_mid(model, col, 30);
    CHECK(t.delta(22) == -41);
    CHECK(t.delta(23) == -40);
    CHECK(t.delta(24) == -42);
    const std::vector<std::size_t> expect = {34, 36, 37, 37, 38, 38, 40, 41};
    const std::vector<std::int64_t> error = {0, 1, 1, 0, 0, -1, 0, 0};
    for (std::size_t i = 0; i < 8; ++i) {
        const std::uint64_t x = keys[34 + i];
        const double pos = model.position(x);
        const std::size_t p = clamp_index(pos, 100);
        const std::size_t part = t.partition_of(pos, p);
        if (i >= 1 && i <= 5) CHECK(part == 23);
        const std::size_t corrected = t.start(part, p);
        CHECK(corrected == expect[i]);
        CHECK(static_cast<std::int64_t>(corrected) - static_cast<std::int64_t>(34 + i) == error[i]);
    }
}

TEST_CASE("perfect model gives zero drift") {
    std::vector<std::uint64_t> keys(500);
    for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i;
    SortedKeyColumn<std::uint64_t> col(keys);
    InterpolationModel<std::uint64_t> m = InterpolationModel<std::uint64_t>::fit(col);
    const auto t = build_full(m, col);
    for (std::size_t k = 0; k < t.size(); ++k) REQUIRE(t.entry(k) == RangeEntry{0, 1});
    CHECK(t.entry_bits() == 8);
    const auto mid = build_mid(m, col, col.size());
    for (auto d : mid.deltas()) REQUIRE(d == 0);
}

TEST_CASE("non-monotone model needs an explicit opt-in for range tables") {
    std::mt19937_64 rng(2);
    auto keys = testutil::random_keys<std::uint64_t>(rng, 5000, 1ULL << 30, 0.0);
    SortedKeyColumn<std::uint64_t> col(keys);
    const auto m = TwoLevelLinearModel<std::uint64_t>::fit(col, 16);
    CHECK_THROWS_AS(build_full(m, col), NonMonotoneModel);
    CHECK_THROWS_AS(build_compressed(m, col, 100), NonMonotoneModel);
    BuildOptions opts;
    opts.allow_non_monotone = true;
    const auto t = build_full(m, col, opts);
    CHECK_FALSE(t.exact_windows());
    check_full_containment(m, keys, t);
}

TEST_CASE("invalid m") {
    SortedKeyColumn<std::uint32_t> col({1, 2, 3});
    InterpolationModel<std::uint32_t> m(1, 3, 3);
    CHECK_THROWS_AS(build_compressed(m, col, 0), InvalidM);
    CHECK_THROWS_AS(build_compressed(m, col, 4), InvalidM);
    CHECK_THROWS_AS(build_mid(m, col, 0), InvalidM);
    CHECK_THROWS_AS(build_mid(m, col, 1, 0), InvalidArgument);
}

TEST_CASE("full tables match brute force and contain every key") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 80; ++trial) {
        const std::size_t n = 1 + rng() % 20000;
        const double dup = trial % 3 == 0 ? 0.3 : 0.0;
        auto keys = testutil::random_keys<std::uint64_t>(rng, n, trial % 2 ? 3 * n : 1ULL << 50, dup);
        SortedKeyColumn<std::uint64_t> col(keys);
        const auto im = InterpolationModel<std::uint64_t>::fit(col);
        const auto t = build_full(im, col);
        const auto expect = brute_full_table(brute_partitions(im, keys, n), n);
        REQUIRE(t.entries() == expect);
        check_full_containment(im, keys, t);
        const auto sp = LinearSplineModel<std::uint64_t>::fit(col, 16);
        check_full_containment(sp, keys, build_full(sp, col));
    }
}

TEST_CASE("compressed tables contain every key in [p + delta, p + delta + count]") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 80; ++trial) {
        const std::size_t n = 1 + rng() % 20000;
        auto keys = testutil::random_keys<std::uint32_t>(rng, n, trial % 2 ? 2 * n : 1U << 31, 0.15);
        SortedKeyColumn<std::uint32_t> col(keys);
        const auto im = InterpolationModel<std::uint32_t>::fit(col);
        const std::size_t m = 1 + rng() % n;
        const auto t = build_compressed(im, col, m);
        CHECK(t.count_meaning() == CountMeaning::kMaxOffset);
        CHECK(t.exact_windows() == (m == n));
        const auto parts = brute_partitions(im, keys, m);
        for (std::size_t k = 0; k < m; ++k) {
            if (parts[k].members == 0) continue;
            REQUIRE(t.entry(k).delta == parts[k].min_drift);
            REQUIRE(t.entry(k).count == parts[k].max_offset - parts[k].min_drift);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double pos = im.position(keys[i]);
            const std::size_t p = clamp_index(pos, n);
            const Window w = t.window(t.partition_of(pos, p), p);
            // Every stored copy of the key, and so its rank, is inside.
            REQUIRE(w.lo <= col.rank_at(i));
            REQUIRE(i <= w.hi);
        }
    }
}

TEST_CASE("compressed with m = n covers the same keys as the full table") {
    std::mt19937_64 rng(13);
    auto keys = testutil::random_keys<std::uint64_t>(rng, 4000, 50000, 0.0);
    SortedKeyColumn<std::uint64_t> col(keys);
    const auto im = InterpolationModel<std::uint64_t>::fit(col);
    const auto full = build_full(im, col);
    const auto comp = build_compressed(im, col, keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::size_t p = im.predict(keys[i]);
        const Window a = full.window(p, p);
        const Window b = comp.window(p, p);
        REQUIRE(a.lo == b.lo);
        REQUIRE(a.hi == b.hi);
    }
}

TEST_CASE("mid tables: mean drift, bounded error, sampling") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng() % 20000;
        auto keys = testutil::random_keys<std::uint64_t>(rng, n, 1ULL << 40, trial % 2 ? 0.2 : 0.0);
        SortedKeyColumn<std::uint64_t> col(keys);
        const auto model = TwoLevelLinearModel<std::uint64_t>::fit(col, 1 + rng() % 64);
        const std::size_t m = 1 + rng() % n;
        const auto t = build_mid(model, col, m);
        const auto parts = brute_partitions(model, keys, m);
        for (std::size_t k = 0; k < m; ++k) {
            if (parts[k].members == 0) continue;
            REQUIRE(t.delta(k) == parts[k].drift_sum / parts[k].members);
        }
        // Corrected error within a partition never exceeds its drift spread.
        std::vector<std::int64_t> lo(m, INT64_MAX), hi(m, INT64_MIN);
        for (std::size_t i = 0; i < n; ++i) {
            const double pos = model.position(keys[i]);
            const auto p = static_cast<std::int64_t>(clamp_index(pos, n));
            const std::size_t part = t.partition_of(pos, static_cast<std::size_t>(p));
            const std::int64_t d = static_cast<std::int64_t>(col.rank_at(i)) - p;
            lo[part] = std::min(lo[part], d);
            hi[part] = std::max(hi[part], d);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double pos = model.position(keys[i]);
            const std::size_t p = clamp_index(pos, n);
            const std::size_t part = t.partition_of(pos, p);
            const auto err = std::abs(static_cast<std::int64_t>(t.start(part, p)) -
                                      static_cast<std::int64_t>(col.rank_at(i)));
            REQUIRE(err <= hi[part] - lo[part]);
        }
    }
    SUBCASE("one key per partition gives zero corrected error") {
        std::vector<std::uint64_t> keys;
        for (std::uint64_t i = 0; i < 300; ++i) keys.push_back(i * i);
        SortedKeyColumn<std::uint64_t> col(keys);
        const auto im = InterpolationModel<std::uint64_t>::fit(col);
        const auto t = build_mid(im, col, keys.size());
        const auto parts = brute_partitions(im, keys, keys.size());
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const std::size_t p = im.predict(keys[i]);
            if (parts[p].members == 1) REQUIRE(t.start(p, p) == i);
        }
    }
    SUBCASE("sampled build uses every s-th key") {
        std::vector<std::uint64_t> keys;
        for (std::uint64_t i = 0; i < 1000; ++i) keys.push_back(i * 8 + (i % 7));
        SortedKeyColumn<std::uint64_t> col(keys);
        const auto im = InterpolationModel<std::uint64_t>::fit(col);
        const auto t = build_mid(im, col, 10, 4);
        std::vector<std::int64_t> sum(10, 0), cnt(10, 0);
        for (std::size_t i = 0; i < keys.size(); i += 4) {
            const double pos = im.position(keys[i]);
            const auto p = clamp_index(pos, keys.size());
            const auto part = partition_index(pos, p, 10, keys.size());
            sum[part] += static_cast<std::int64_t>(i) - static_cast<std::int64_t>(p);
            ++cnt[part];
        }
        for (std::size_t k = 0; k < 10; ++k) {
            if (cnt[k]) REQUIRE(t.delta(k) == sum[k] / cnt[k]);
        }
    }
}

TEST_CASE("empty mid partitions take the right neighbour, else the left") {
    // Keys only predict partitions 1 and 3 of 5.
    const std::vector<std::int64_t> sums = {0, 10, 0, -6, 0};
    const std::vector<std::int64_t> members = {0, 2, 0, 3, 0};
    const auto d = detail::mid_deltas(sums, members);
    CHECK(d == std::vector<std::int64_t>{5, 5, -2, -2, -2});
}

TEST_CASE("fill_empty rule and idempotence") {
    RawRangeEntries raw{{0, -1, 0, 0, -3, 0}, {0, 2, 0, 0, 4, 0}};
    fill_empty(raw, 6);
    CHECK(raw.delta == std::vector<std::int64_t>{0, -1, -1, -2, -3, 0});
    CHECK(raw.count == std::vector<std::int64_t>{2, 2, 4, 4, 4, 1});
    auto again = raw;
    fill_empty(again, 6);
    CHECK(again.delta == raw.delta);
    CHECK(again.count == raw.count);
    RawRangeEntries full{{0, 0}, {1, 1}};
    fill_empty(full, 2);
    CHECK(full.delta == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("build evaluates the model once per key") {
    std::mt19937_64 rng(15);
    auto keys = testutil::random_keys<std::uint64_t>(rng, 12345, 1ULL << 40, 0.1);
    SortedKeyColumn<std::uint64_t> col(keys);
    const auto im = InterpolationModel<std::uint64_t>::fit(col);
    CountingModel<InterpolationModel<std::uint64_t>> counted(im);
    (void)build_full(counted, col);
    CHECK(counted.evaluations() == keys.size());
    counted.reset();
    (void)build_compressed(counted, col, 100);
    CHECK(counted.evaluations() == keys.size());
    counted.reset();
    (void)build_mid(counted, col, 100);
    CHECK(counted.evaluations() == keys.size());
}

TEST_CASE("parallel build equals serial build") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 10; ++trial) {
        auto keys = testutil::random_keys<std::uint64_t>(rng, 50000 + rng() % 50000, 1ULL << 32, 0.3);
        SortedKeyColumn<std::uint64_t> col(keys);
        const auto im = InterpolationModel<std::uint64_t>::fit(col);
        BuildOptions par;
        par.threads = 4;
        CHECK(build_full(im, col) == build_full(im, col, par));
        CHECK(build_compressed(im, col, 777) == build_compressed(im, col, 777, par));
        CHECK(build_mid(im, col, 777) == build_mid(im, col, 777, 1, par));
    }
}

TEST_CASE("entry width selection") {
    CHECK(PackedInts::min_bits(std::vector<std::int64_t>{0}) == 8);
    CHECK(PackedInts::min_bits(std::vector<std::int64_t>{-202, 5}) == 16);
    CHECK(PackedInts::min_bits(std::vector<std::int64_t>{40000}) == 32);
    CHECK(PackedInts::min_bits(std::vector<std::int64_t>{-128, 127}) == 8);
    CHECK(PackedInts::min_bits(std::vector<std::int64_t>{128}) == 16);
    CHECK(PackedInts::min_bits(std::vector<std::int64_t>{1LL << 40}) == 64);
    CHECK_THROWS_AS(PackedInts(std::vector<std::int64_t>{300}, 8), BadWidth);
    CHECK_THROWS_AS(PackedInts(std::vector<std::int64_t>{1}, 12), BadWidth);

    std::vector<RangeEntry> entries = {{-202, 3}, {5, 1}};
    RangeTable t(entries, 4, CountMeaning::kCardinality, true, 64);
    CHECK(t.entry_bits() == 64);
    CHECK(t.bytes() == 32);
    CHECK(t.select_entry_width() == 16);
    CHECK(t.bytes() == 8);
    CHECK(t.entries() == entries);
    MidTable mt(std::vector<std::int64_t>{40000, -1}, 2, 64);
    CHECK(mt.select_entry_width() == 32);
    CHECK(mt.deltas() == std::vector<std::int64_t>{40000, -1});
    t.reencode(32);
    CHECK(t.entries() == entries);
    CHECK_THROWS_AS(t.reencode(8), BadWidth);
}

TEST_CASE("table serialization") {
    std::mt19937_64 rng(17);
    auto keys = testutil::random_keys<std::uint64_t>(rng, 3000, 1ULL << 44, 0.1);
    SortedKeyColumn<std::uint64_t> col(keys);
    const auto im = InterpolationModel<std::uint64_t>::fit(col);
    const auto full = build_full(im, col);
    const auto comp = build_compressed(im, col, 300);
    const auto mid = build_mid(im, col, 300);
    for (const auto& t : {full, comp}) {
        const auto blob = t.serialize();
        CHECK(blob.size() == 28 + t.bytes());
        CHECK(peek_table_mode(blob) == TableMode::kRange);
        CHECK(RangeTable::deserialize(blob) == t);
        CHECK(RangeTable::deserialize(blob).serialize() == blob);
        CHECK_THROWS_AS(MidTable::deserialize(blob), WrongMode);
        auto cut = blob;
        cut.resize(cut.size() - 3);
        CHECK_THROWS_AS(RangeTable::deserialize(cut), TruncatedFile);
        auto bad = blob;
        bad[7] = std::byte{12};
        CHECK_THROWS_AS(RangeTable::deserialize(bad), BadWidth);
        bad = blob;
        bad[1] = std::byte{'x'};
        CHECK_THROWS_AS(RangeTable::deserialize(bad), BadFormat);
    }
    const auto blob = mid.serialize();
    CHECK(peek_table_mode(blob) == TableMode::kMid);
    CHECK(MidTable::deserialize(blob) == mid);
    CHECK_THROWS_AS(RangeTable::deserialize(blob), WrongMode);
    CHECK_THROWS_AS(MidTable::deserialize(std::span<const std::byte>(blob).first(10)), TruncatedFile);
    CHECK_THROWS_AS(MidTable::deserialize(std::span<const std::byte>(blob).first(blob.size() - 1)), TruncatedFile);
}

TEST_CASE("windows are clamped into the array") {
    std::vector<RangeEntry> entries = {{-5, 3}, {10, 4}};
    RangeTable t(entries, 2, CountMeaning::kCardinality, true);
    CHECK(t.window(0, 0).lo == 0);
    CHECK(t.window(0, 0).hi == 0);
    CHECK(t.window(1, 1).lo == 1);
    CHECK(t.window(1, 1).hi == 1);
    CHECK(t.midpoint_delta(1) == 12);
    MidTable mt(std::vector<std::int64_t>{-9, 9}, 2);
    CHECK(mt.start(0, 0) == 0);
    CHECK(mt.start(1, 1) == 1);
}
