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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>

#include "shift_index/cost.hpp"
#include "shift_index/data_io.hpp"
#include "shift_index/models.hpp"
#include "shift_index/shift_table.hpp"
#include "test_util.hpp"

using namespace shift_index;
namespace fs = std::filesystem;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Asymptotic Kolmogorov survival function Q(lambda).
double kolmogorov_p(double lambda) {
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        sum += (j % 2 ? 2.0 : -2.0) * std::exp(-2.0 * j * j * lambda * lambda);
    }
    return std::clamp(sum, 0.0, 1.0);
}

template <KeyType Key>
double ks_p_value(const SortedKeyColumn<Key>& col, const std::function<double(double)>& cdf) {
    const double n = static_cast<double>(col.size());
    double d = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) {
        const double f = cdf(static_cast<double>(col[i]));
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double sn = std::sqrt(n);
    return kolmogorov_p((sn + 0.12 + 0.11 / sn) * d);
}

template <KeyType Key>
double mean_model_error(const InterpolationModel<Key>& m, const SortedKeyColumn<Key>& col) {
    double sum = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) {
        sum += std::abs(static_cast<double>(col.rank_at(i)) - static_cast<double>(m.predict(col[i])));
    }
    return sum / static_cast<double>(col.size());
}

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name) : path(fs::temp_directory_path() / ("shift_index_" + name)) {}
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
};

void write_raw(const fs::path& p, std::uint64_t count, const std::vector<std::uint8_t>& body) {
    std::ofstream out(p, std::ios::binary);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((count >> (8 * i)) & 0xff));
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
}

}  // namespace

TEST_CASE("uden is dense and exactly modelled") {
    const auto col = generate<std::uint64_t>({Family::kUden, 100, 64, 1});
    for (std::size_t i = 0; i < 100; ++i) REQUIRE(col[i] == i);
    CHECK(mean_model_error(InterpolationModel<std::uint64_t>::fit(col), col) == 0.0);
}

TEST_CASE("generators are sorted, deterministic and respect the width") {
    for (auto f : {Family::kUden, Family::kUspr, Family::kNorm, Family::kLogn, Family::kClusteredRealLike}) {
        CAPTURE(family_name(f));
        const auto a = generate<std::uint64_t>({f, 5000, 64, 9});
        const auto b = generate<std::uint64_t>({f, 5000, 64, 9});
        CHECK(std::ranges::equal(a.keys(), b.keys()));
        CHECK(std::ranges::is_sorted(a.keys()));
        CHECK(a.size() == 5000);
        const auto c = generate<std::uint32_t>({f, 5000, 32, 9});
        CHECK(std::ranges::is_sorted(c.keys()));
        if (f != Family::kUden) {
            const auto d = generate<std::uint64_t>({f, 5000, 64, 10});
            CHECK_FALSE(std::ranges::equal(a.keys(), d.keys()));
        }
    }
    CHECK_THROWS_AS(generate<std::uint32_t>({Family::kUspr, 10, 64, 1}), BadWidth);
    CHECK_THROWS_AS(generate<std::uint64_t>({Family::kUspr, 0, 64, 1}), InvalidArgument);
    CHECK(parse_family("clustered_real_like") == Family::kClusteredRealLike);
    CHECK_THROWS_AS(parse_family("zipf"), InvalidArgument);
}

TEST_CASE("clustered keys are unique") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto col = generate<std::uint64_t>({Family::kClusteredRealLike, 100000, 64, seed});
        CHECK(std::adjacent_find(col.keys().begin(), col.keys().end()) == col.keys().end());
        const auto c32 = generate<std::uint32_t>({Family::kClusteredRealLike, 100000, 32, seed});
        CHECK(std::adjacent_find(c32.keys().begin(), c32.keys().end()) == c32.keys().end());
    }
}

TEST_CASE("distribution sanity (Kolmogorov-Smirnov, n = 1e5)") {
    constexpr std::size_t n = 100000;
    SUBCASE("uspr") {
        const auto c64 = generate<std::uint64_t>({Family::kUspr, n, 64, 21});
        CHECK(ks_p_value(c64, [](double x) { return x / std::ldexp(1.0, 64); }) > 0.01);
        const auto c32 = generate<std::uint32_t>({Family::kUspr, n, 32, 21});
        CHECK(ks_p_value(c32, [](double x) { return (x + 0.5) / std::ldexp(1.0, 32); }) > 0.01);
    }
    SUBCASE("norm") {
        const auto c = generate<std::uint64_t>({Family::kNorm, n, 64, 22});
        const double scale = std::ldexp(1.0, 64);
        CHECK(ks_p_value(c, [&](double x) { return normal_cdf(x / scale * 16.0 - 8.0); }) > 0.01);
    }
    SUBCASE("logn") {
        const auto c = generate<std::uint64_t>({Family::kLogn, n, 64, 23});
        CHECK(ks_p_value(c, [](double x) { return normal_cdf(std::log(x / 1e9) / 2.0); }) > 0.01);
    }
    SUBCASE("the test rejects a wrong target") {
        const auto c = generate<std::uint64_t>({Family::kNorm, n, 64, 22});
        CHECK(ks_p_value(c, [](double x) { return x / std::ldexp(1.0, 64); }) < 0.01);
    }
}

TEST_CASE("logn is smooth enough for a coarse spline") {
    const std::size_t n = 100000;
    const auto c = generate<std::uint64_t>({Family::kLogn, n, 64, 5});
    const auto s = LinearSplineModel<std::uint64_t>::fit(c, n / 100);
    MESSAGE("logn knots at max_error n/100: " << s.knots().size());
    CHECK(s.knots().size() <= 32);
}

TEST_CASE("clustered keys defeat the interpolation model but not the corrected one") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        CAPTURE(seed);
        const std::size_t n = 1000000;
        const auto col = generate<std::uint64_t>({Family::kClusteredRealLike, n, 64, seed});
        const auto im = InterpolationModel<std::uint64_t>::fit(col);
        const double before = mean_model_error(im, col);
        const double after = estimate_error(build_full(im, col));
        MESSAGE("seed " << seed << ": IM error " << before << ", corrected " << after);
        CHECK(before > static_cast<double>(n) / 20.0);
        CHECK(after < 10.0);
    }
}

TEST_CASE("key file round trip") {
    TempFile f64("rt64.bin");
    TempFile f32("rt32.bin");
    const auto a = generate<std::uint64_t>({Family::kClusteredRealLike, 3000, 64, 4});
    write_keys(f64.path, a);
    CHECK(fs::file_size(f64.path) == 8 + 8 * 3000);
    CHECK(key_file_width(f64.path) == 64);
    bool sorted = false;
    CHECK(std::ranges::equal(read_keys<std::uint64_t>(f64.path, &sorted).keys(), a.keys()));
    CHECK(sorted);
    CHECK_THROWS_AS(read_keys<std::uint32_t>(f64.path), BadWidth);

    const auto b = generate<std::uint32_t>({Family::kLogn, 3000, 32, 4});
    write_keys(f32.path, b);
    CHECK(fs::file_size(f32.path) == 8 + 4 * 3000);
    CHECK(key_file_width(f32.path) == 32);
    CHECK(std::ranges::equal(read_keys<std::uint32_t>(f32.path).keys(), b.keys()));
}

TEST_CASE("hand-written key files") {
    TempFile f("hand.bin");
    SUBCASE("four keys") {
        write_raw(f.path, 4, {10, 0, 0, 0, 0, 0, 0, 0, 20, 0, 0, 0, 0, 0, 0, 0,
                              30, 0, 0, 0, 0, 0, 0, 0, 40, 0, 0, 0, 0, 0, 0, 0});
        const auto col = read_keys<std::uint64_t>(f.path);
        CHECK(std::ranges::equal(col.keys(), std::vector<std::uint64_t>{10, 20, 30, 40}));
    }
    SUBCASE("unsorted input is sorted and flagged") {
        write_raw(f.path, 4, {40, 0, 0, 0, 10, 0, 0, 0, 30, 0, 0, 0, 20, 0, 0, 0});
        bool sorted = true;
        const auto col = read_keys<std::uint32_t>(f.path, &sorted);
        CHECK_FALSE(sorted);
        CHECK(std::ranges::equal(col.keys(), std::vector<std::uint32_t>{10, 20, 30, 40}));
    }
    SUBCASE("truncated") {
        write_raw(f.path, 4, {1, 0, 0, 0, 2, 0, 0, 0});
        CHECK_THROWS_AS(read_keys<std::uint64_t>(f.path), TruncatedFile);
        write_raw(f.path, 1ULL << 62, {1, 0, 0, 0});
        CHECK_THROWS_AS(read_keys<std::uint64_t>(f.path), TruncatedFile);
        std::ofstream(f.path, std::ios::binary | std::ios::trunc).write("abc", 3);
        CHECK_THROWS_AS(read_keys<std::uint64_t>(f.path), TruncatedFile);
    }
    SUBCASE("size matches no width") {
        write_raw(f.path, 2, std::vector<std::uint8_t>(12, 1));
        CHECK_THROWS_AS(read_keys<std::uint64_t>(f.path), BadWidth);
        CHECK_THROWS_AS(key_file_width(f.path), BadWidth);
    }
}

TEST_CASE("workloads") {
    SortedKeyColumn<std::uint64_t> col({10, 20, 30, 40});
    const std::set<std::uint64_t> stored = {10, 20, 30, 40};
    const auto w = make_workload(col, 8, WorkloadMode::kExistingKeys, 3);
    CHECK(w.size() == 8);
    for (auto q : w) CHECK(stored.count(q) == 1);
    CHECK(make_workload(col, 8, WorkloadMode::kExistingKeys, 3) == w);

    const auto r = make_workload(col, 1000, WorkloadMode::kUniformRange, 3);
    CHECK(r == make_workload(col, 1000, WorkloadMode::kUniformRange, 3));
    std::size_t missing = 0;
    for (auto q : r) {
        CHECK(q >= 10);
        CHECK(q <= 40);
        missing += stored.count(q) == 0;
    }
    CHECK(missing > 500);

    const auto m = make_workload(col, 1000, WorkloadMode::kMixed, 3);
    std::size_t hits = 0;
    for (auto q : m) hits += stored.count(q);
    CHECK(hits > 450);
    CHECK(hits < 1000);

    CHECK_THROWS_AS(make_workload(col, 0, WorkloadMode::kMixed, 3), InvalidArgument);
    CHECK(parse_workload("mixed") == WorkloadMode::kMixed);
    CHECK_THROWS_AS(parse_workload("zipf"), InvalidArgument);

    const auto full = generate<std::uint64_t>({Family::kUspr, 1000, 64, 1});
    for (auto q : make_workload(full, 1000, WorkloadMode::kUniformRange, 5)) {
        REQUIRE(q >= full.min_key());
        REQUIRE(q <= full.max_key());
    }
}
