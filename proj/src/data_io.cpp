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

#include "shift_index/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "byte_io.hpp"

namespace shift_index {

namespace {

// Distributions are built from raw engine output so that a seed gives the
// same keys with any standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t bits() { return engine_(); }
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }
    double log_uniform(double lo, double hi) { return lo * std::exp(uniform() * std::log(hi / lo)); }
    std::uint64_t below(std::uint64_t bound) { return bound == 0 ? bits() : bits() % bound; }

  private:
    std::mt19937_64 engine_;
};

template <KeyType Key>
constexpr double key_limit() {
    return static_cast<double>(std::numeric_limits<Key>::max());
}

template <KeyType Key>
Key to_key(double v) {
    // 2^64 - 1 is not a double; anything at or above the next double up overflows.
    if (!(v >= 0.0) || v >= std::ldexp(1.0, sizeof(Key) * 8)) {
        throw WidthOverflow("generated value exceeds the key width");
    }
    return static_cast<Key>(v);
}

template <KeyType Key>
std::vector<Key> gen_uden(std::size_t n) {
    if (n - 1 > std::numeric_limits<Key>::max()) throw WidthOverflow("uden needs n - 1 <= max key");
    std::vector<Key> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = static_cast<Key>(i);
    return keys;
}

template <KeyType Key>
std::vector<Key> gen_uspr(std::size_t n, Rng& rng) {
    std::vector<Key> keys(n);
    for (auto& k : keys) k = static_cast<Key>(rng.bits() >> (64 - sizeof(Key) * 8));
    std::sort(keys.begin(), keys.end());
    return keys;
}

template <KeyType Key>
std::vector<Key> gen_norm(std::size_t n, Rng& rng) {
    constexpr double kClip = 8.0;
    // Largest double below 2^bits, so the top of the range still fits.
    const double scale = std::nextafter(std::ldexp(1.0, sizeof(Key) * 8), 0.0);
    std::vector<Key> keys(n);
    for (auto& k : keys) {
        const double z = std::clamp(rng.normal(), -kClip, kClip);
        k = to_key<Key>((z + kClip) / (2.0 * kClip) * scale);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

template <KeyType Key>
std::vector<Key> gen_logn(std::size_t n, Rng& rng) {
    constexpr double kSigma = 2.0;
    const double scale = sizeof(Key) == 8 ? 1e9 : 1e4;
    std::vector<Key> keys(n);
    for (auto& k : keys) k = to_key<Key>(std::exp(kSigma * rng.normal()) * scale);
    std::sort(keys.begin(), keys.end());
    return keys;
}

// Segments with independently drawn key share and domain share, so local
// density swings by up to 64x either way; some segments are preceded by an
// empty gap; inside a segment, spacings are exponential with occasional
// bursts of consecutive integers.
template <KeyType Key>
std::vector<Key> gen_clustered(std::size_t n, Rng& rng) {
    const double limit = key_limit<Key>();
    const double domain = std::max(sizeof(Key) == 8 ? std::ldexp(1.0, 60) : std::ldexp(1.0, 31),
                                   std::min(limit, 4.0 * static_cast<double>(n)));
    if (static_cast<double>(n) > limit) throw WidthOverflow("too many unique keys for the key width");

    const std::size_t segments = std::clamp<std::size_t>(n / 64, 1, 16);
    std::vector<double> key_share(segments);
    std::vector<double> span_share(segments);
    std::vector<double> gap_share(segments);
    double key_total = 0.0;
    double span_total = 0.0;
    for (std::size_t i = 0; i < segments; ++i) {
        key_share[i] = rng.log_uniform(1.0 / 8.0, 8.0);
        span_share[i] = rng.log_uniform(1.0 / 8.0, 8.0);
        gap_share[i] = rng.uniform() < 0.25 ? rng.log_uniform(1.0, 16.0) : 0.0;
        key_total += key_share[i];
        span_total += span_share[i] + gap_share[i];
    }

    std::vector<Key> keys;
    keys.reserve(n);
    double planned = 0.0;  // planned start of the next segment
    // Keys are tracked as integers; doubles lose unit steps above 2^53.
    std::uint64_t next_free = 0;
    std::size_t emitted_target = 0;
    double key_cum = 0.0;
    for (std::size_t i = 0; i < segments; ++i) {
        planned += domain * gap_share[i] / span_total;
        const double span = domain * span_share[i] / span_total;
        key_cum += key_share[i];
        const std::size_t target = i + 1 == segments
                                       ? n
                                       : static_cast<std::size_t>(std::llround(static_cast<double>(n) * key_cum / key_total));
        const std::size_t count = target - std::min(target, emitted_target);
        emitted_target = std::max(target, emitted_target);
        const double mean_gap = std::max(span / std::max<double>(1.0, static_cast<double>(count)), 1.0);
        std::uint64_t x = std::max(static_cast<std::uint64_t>(planned), next_free);
        std::size_t burst = 0;
        for (std::size_t j = 0; j < count; ++j) {
            if (j > 0) {
                if (burst == 0 && rng.uniform() < 1.0 / 1024.0) burst = 32 + rng.below(33);
                if (burst > 0) {
                    --burst;
                    x += 1;
                } else {
                    x += 1 + static_cast<std::uint64_t>(rng.exponential(mean_gap - 1.0));
                }
            }
            if (static_cast<double>(x) > limit || x > std::numeric_limits<Key>::max()) {
                throw WidthOverflow("clustered keys exceed the key width");
            }
            keys.push_back(static_cast<Key>(x));
            next_free = x + 1;
        }
        planned += span;
    }
    return keys;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::byte> data(size);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
    if (!in) throw TruncatedFile("short read from " + path.string());
    return data;
}

unsigned width_from_sizes(std::uint64_t count, std::uint64_t payload) {
    if (count == 0) throw BadFormat("key file holds no keys");
    if (payload / 4 < count) throw TruncatedFile("key file shorter than its declared count");
    if (payload % 8 == 0 && payload / 8 == count) return 64;
    if (payload % 4 == 0 && payload / 4 == count) return 32;
    throw BadWidth("key file size matches neither 32- nor 64-bit keys");
}

}  // namespace

std::string_view family_name(Family family) {
    switch (family) {
        case Family::kUden: return "uden";
        case Family::kUspr: return "uspr";
        case Family::kNorm: return "norm";
        case Family::kLogn: return "logn";
        case Family::kClusteredRealLike: return "clustered_real_like";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (auto f : {Family::kUden, Family::kUspr, Family::kNorm, Family::kLogn, Family::kClusteredRealLike}) {
        if (family_name(f) == name) return f;
    }
    throw InvalidArgument("unknown family '" + std::string(name) + "'");
}

template <KeyType Key>
SortedKeyColumn<Key> generate(const DatasetSpec& spec) {
    if (spec.n < 1) throw InvalidArgument("dataset needs n >= 1");
    if (spec.width != sizeof(Key) * 8) throw BadWidth("spec width does not match the key type");
    Rng rng(spec.seed);
    switch (spec.family) {
        case Family::kUden: return SortedKeyColumn<Key>(gen_uden<Key>(spec.n));
        case Family::kUspr: return SortedKeyColumn<Key>(gen_uspr<Key>(spec.n, rng));
        case Family::kNorm: return SortedKeyColumn<Key>(gen_norm<Key>(spec.n, rng));
        case Family::kLogn: return SortedKeyColumn<Key>(gen_logn<Key>(spec.n, rng));
        case Family::kClusteredRealLike: return SortedKeyColumn<Key>(gen_clustered<Key>(spec.n, rng));
    }
    throw InvalidArgument("unknown family");
}

unsigned key_file_width(const std::filesystem::path& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw InvalidArgument("cannot stat " + path.string());
    if (size < 8) throw TruncatedFile("key file shorter than its header");
    std::ifstream in(path, std::ios::binary);
    std::byte head[8];
    in.read(reinterpret_cast<char*>(head), 8);
    if (!in) throw TruncatedFile("key file shorter than its header");
    detail::ByteReader r(head);
    return width_from_sizes(r.u64(), size - 8);
}

template <KeyType Key>
SortedKeyColumn<Key> read_keys(const std::filesystem::path& path, bool* was_sorted) {
    const auto data = read_file(path);
    detail::ByteReader r(data);
    const std::uint64_t count = r.u64();
    const unsigned width = width_from_sizes(count, r.remaining());
    if (width != sizeof(Key) * 8) throw BadWidth("key file holds " + std::to_string(width) + "-bit keys");
    std::vector<Key> keys(count);
    for (auto& k : keys) k = static_cast<Key>(r.get_le(sizeof(Key)));
    return SortedKeyColumn<Key>::from_unsorted(std::move(keys), was_sorted);
}

template <KeyType Key>
void write_keys(const std::filesystem::path& path, const SortedKeyColumn<Key>& column) {
    detail::ByteWriter w;
    w.reserve(8 + column.size() * sizeof(Key));
    w.u64(column.size());
    for (Key k : column.keys()) w.put_le(k, sizeof(Key));
    const auto bytes = w.take();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidArgument("short write to " + path.string());
}

std::string_view workload_name(WorkloadMode mode) {
    switch (mode) {
        case WorkloadMode::kExistingKeys: return "keys";
        case WorkloadMode::kUniformRange: return "range";
        case WorkloadMode::kMixed: return "mixed";
    }
    return "?";
}

WorkloadMode parse_workload(std::string_view name) {
    for (auto m : {WorkloadMode::kExistingKeys, WorkloadMode::kUniformRange, WorkloadMode::kMixed}) {
        if (workload_name(m) == name) return m;
    }
    throw InvalidArgument("unknown workload '" + std::string(name) + "'");
}

template <KeyType Key>
std::vector<Key> make_workload(const SortedKeyColumn<Key>& column, std::size_t count, WorkloadMode mode,
                               std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("workload needs at least one query");
    Rng rng(seed);
    const std::uint64_t lo = column.min_key();
    const std::uint64_t span = static_cast<std::uint64_t>(column.max_key()) - lo;
    auto existing = [&] { return column[rng.below(column.size())]; };
    auto ranged = [&] { return static_cast<Key>(lo + rng.below(span + 1)); };
    std::vector<Key> out(count);
    for (auto& q : out) {
        switch (mode) {
            case WorkloadMode::kExistingKeys: q = existing(); break;
            case WorkloadMode::kUniformRange: q = ranged(); break;
            case WorkloadMode::kMixed: q = (rng.bits() & 1) ? existing() : ranged(); break;
        }
    }
    return out;
}

#define SHIFT_INDEX_INSTANTIATE(Key)                                                                          \
    template SortedKeyColumn<Key> generate<Key>(const DatasetSpec&);                                          \
    template SortedKeyColumn<Key> read_keys<Key>(const std::filesystem::path&, bool*);                        \
    template void write_keys<Key>(const std::filesystem::path&, const SortedKeyColumn<Key>&);                 \
    template std::vector<Key> make_workload<Key>(const SortedKeyColumn<Key>&, std::size_t, WorkloadMode, \
                                                 std::uint64_t);

SHIFT_INDEX_INSTANTIATE(std::uint32_t)
SHIFT_INDEX_INSTANTIATE(std::uint64_t)

#undef SHIFT_INDEX_INSTANTIATE

}  // namespace shift_index
