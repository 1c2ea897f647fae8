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

#include "shift_index/shift_table.hpp"

#include <algorithm>
#include <bit>

#include "byte_io.hpp"

namespace shift_index {

namespace {

constexpr std::string_view kTableMagic = "SHTB";
constexpr std::uint16_t kTableVersion = 1;
constexpr std::size_t kHeaderBytes = 28;

static_assert(std::endian::native == std::endian::little, "in-memory table layout assumes little-endian");

bool fits(std::int64_t v, unsigned bits) {
    if (bits >= 64) return true;
    const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
    return v >= -hi - 1 && v <= hi;
}

bool valid_width(unsigned bits) { return bits == 8 || bits == 16 || bits == 32 || bits == 64; }

struct Header {
    TableMode mode;
    unsigned bits;
    CountMeaning meaning;
    bool exact;
    std::uint64_t m;
    std::uint64_t n;
};

void write_header(detail::ByteWriter& w, const Header& h) {
    w.put_bytes(kTableMagic);
    w.u16(kTableVersion);
    w.u8(static_cast<std::uint8_t>(h.mode));
    w.u8(static_cast<std::uint8_t>(h.bits));
    w.u8(static_cast<std::uint8_t>(h.meaning));
    w.u8(h.exact ? 1 : 0);
    w.u16(0);
    w.u64(h.m);
    w.u64(h.n);
}

Header read_header(detail::ByteReader& r) {
    r.expect_magic(kTableMagic);
    if (r.u16() != kTableVersion) throw BadFormat("unsupported table version");
    Header h{};
    const auto mode = r.u8();
    if (mode > 1) throw BadFormat("unknown table mode tag");
    h.mode = static_cast<TableMode>(mode);
    h.bits = r.u8();
    if (!valid_width(h.bits)) throw BadWidth("table entry width must be 8, 16, 32 or 64");
    const auto meaning = r.u8();
    if (meaning > 1) throw BadFormat("unknown count meaning");
    h.meaning = static_cast<CountMeaning>(meaning);
    const auto flags = r.u8();
    if (flags > 1) throw BadFormat("unknown table flags");
    h.exact = flags == 1;
    r.u16();
    h.m = r.u64();
    h.n = r.u64();
    if (h.m == 0 || h.n == 0 || h.m > h.n) throw BadFormat("table header has invalid m or n");
    return h;
}

std::vector<std::int64_t> read_values(detail::ByteReader& r, std::size_t count, unsigned bits) {
    const unsigned bytes = bits / 8;
    if (r.remaining() / bytes < count) throw TruncatedFile("table entries truncated");
    if (r.remaining() != count * bytes) throw BadFormat("trailing bytes after table entries");
    std::vector<std::int64_t> values(count);
    for (auto& v : values) v = detail::sign_extend(r.get_le(bytes), bits);
    return values;
}

void write_values(detail::ByteWriter& w, const PackedInts& packed) {
    const unsigned bytes = packed.bits() / 8;
    for (std::size_t i = 0; i < packed.size(); ++i) w.put_le(static_cast<std::uint64_t>(packed.get(i)), bytes);
}

}  // namespace

template <class Get>
void PackedInts::pack(Get&& get) {
    if (!valid_width(bits_)) throw BadWidth("entry width must be 8, 16, 32 or 64");
    for (std::size_t i = 0; i < size_; ++i) {
        if (!fits(get(i), bits_)) throw BadWidth("value does not fit the requested entry width");
    }
    storage_.resize(size_ * (bits_ / 8));
    auto store = [&]<class T>(T) {
        for (std::size_t i = 0; i < size_; ++i) {
            const T v = static_cast<T>(get(i));
            std::memcpy(storage_.data() + i * sizeof(T), &v, sizeof(T));
        }
    };
    switch (bits_) {
        case 8: store(std::int8_t{}); break;
        case 16: store(std::int16_t{}); break;
        case 32: store(std::int32_t{}); break;
        default: store(std::int64_t{}); break;
    }
}

PackedInts::PackedInts(std::span<const std::int64_t> values, unsigned bits) : size_(values.size()), bits_(bits) {
    pack([&](std::size_t i) { return values[i]; });
}

PackedInts::PackedInts(std::span<const std::int64_t> even, std::span<const std::int64_t> odd, unsigned bits)
    : size_(2 * even.size()), bits_(bits) {
    if (even.size() != odd.size()) throw InvalidArgument("interleaved halves differ in length");
    pack([&](std::size_t i) { return (i & 1) ? odd[i / 2] : even[i / 2]; });
}

unsigned PackedInts::min_bits(std::span<const std::int64_t> values) noexcept {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    for (auto v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (unsigned bits : {8U, 16U, 32U}) {
        if (fits(lo, bits) && fits(hi, bits)) return bits;
    }
    return 64;
}

unsigned PackedInts::min_bits(std::span<const std::int64_t> a, std::span<const std::int64_t> b) noexcept {
    return std::max(min_bits(a), min_bits(b));
}

std::vector<std::int64_t> PackedInts::unpack() const {
    std::vector<std::int64_t> out(size_);
    for (std::size_t i = 0; i < size_; ++i) out[i] = get(i);
    return out;
}

void fill_empty(RawRangeEntries& entries, std::size_t n) {
    const std::size_t m = entries.count.size();
    bool have_next = false;
    std::size_t next = 0;
    for (std::size_t k = m; k-- > 0;) {
        if (entries.count[k] != 0) {
            have_next = true;
            next = k;
            continue;
        }
        if (have_next) {
            entries.count[k] = entries.count[next];
            entries.delta[k] = entries.delta[next] + static_cast<std::int64_t>(next - k);
        } else {
            entries.count[k] = 1;
            entries.delta[k] = static_cast<std::int64_t>(n - 1) - static_cast<std::int64_t>(k);
        }
    }
}

namespace detail {

void fill_empty_offsets(std::vector<std::int64_t>& min_drift, std::vector<std::int64_t>& span,
                        std::span<const std::int64_t> members, std::size_t n) {
    const std::size_t m = members.size();
    // Predictions that can land in partition j: [lo, hi].
    auto pred_lo = [&](std::size_t j) { return static_cast<std::int64_t>((static_cast<unsigned __int128>(j) * n) / m); };
    auto pred_hi = [&](std::size_t j) {
        const auto ceil = (static_cast<unsigned __int128>(j + 1) * n + m - 1) / m;
        return std::min(static_cast<std::int64_t>(ceil) - 1, static_cast<std::int64_t>(n - 1));
    };
    // For a monotone model the lower bound of any query that falls in an
    // empty partition is the first member of the next populated one, i.e. the
    // number of keys in earlier partitions.
    std::vector<std::int64_t> first_rank(m + 1, 0);
    for (std::size_t k = 0; k < m; ++k) first_rank[k + 1] = first_rank[k] + members[k];

    bool have_next = false;
    std::size_t next = 0;
    for (std::size_t j = m; j-- > 0;) {
        if (members[j] != 0) {
            have_next = true;
            next = j;
            continue;
        }
        const std::int64_t lo = pred_lo(j);
        const std::int64_t hi = std::max(lo, pred_hi(j));
        if (have_next) {
            const std::int64_t target = first_rank[next];
            min_drift[j] = target - hi;
            span[j] = hi - lo;
        } else {
            min_drift[j] = static_cast<std::int64_t>(n - 1) - lo;
            span[j] = 0;
        }
    }
}

std::vector<std::int64_t> mid_deltas(std::span<const std::int64_t> drift_sum, std::span<const std::int64_t> members) {
    const std::size_t m = members.size();
    std::vector<std::int64_t> deltas(m, 0);
    // Integer division truncates toward zero, the same [.] as truncate().
    for (std::size_t k = 0; k < m; ++k) {
        if (members[k] != 0) deltas[k] = drift_sum[k] / members[k];
    }
    // Empty partitions take the nearest populated neighbour, right first.
    bool have = false;
    std::int64_t carry = 0;
    std::vector<bool> filled(m, false);
    for (std::size_t k = m; k-- > 0;) {
        if (members[k] != 0) {
            have = true;
            carry = deltas[k];
        } else if (have) {
            deltas[k] = carry;
            filled[k] = true;
        }
    }
    have = false;
    for (std::size_t k = 0; k < m; ++k) {
        if (members[k] != 0) {
            have = true;
            carry = deltas[k];
        } else if (!filled[k] && have) {
            deltas[k] = carry;
        }
    }
    return deltas;
}

}  // namespace detail

namespace {

std::vector<std::int64_t> interleave(std::span<const RangeEntry> entries) {
    std::vector<std::int64_t> flat(entries.size() * 2);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        flat[2 * k] = entries[k].delta;
        flat[2 * k + 1] = entries[k].count;
    }
    return flat;
}

}  // namespace

RangeTable::RangeTable(std::span<const RangeEntry> entries, std::size_t n, CountMeaning meaning, bool exact_windows,
                       unsigned bits)
    : m_(entries.size()), n_(n), meaning_(meaning), exact_(exact_windows) {
    if (m_ == 0 || n_ == 0 || m_ > n_) throw InvalidM("range table needs 1 <= m <= n");
    const auto flat = interleave(entries);
    packed_ = PackedInts(flat, bits == 0 ? PackedInts::min_bits(flat) : bits);
}

RangeTable::RangeTable(std::span<const std::int64_t> delta, std::span<const std::int64_t> count, std::size_t n,
                       CountMeaning meaning, bool exact_windows, unsigned bits)
    : m_(delta.size()), n_(n), meaning_(meaning), exact_(exact_windows) {
    if (m_ == 0 || n_ == 0 || m_ > n_) throw InvalidM("range table needs 1 <= m <= n");
    packed_ = PackedInts(delta, count, bits == 0 ? PackedInts::min_bits(delta, count) : bits);
}

void RangeTable::reencode(unsigned bits) { packed_ = PackedInts(packed_.unpack(), bits); }

unsigned RangeTable::select_entry_width() {
    const auto values = packed_.unpack();
    const unsigned bits = PackedInts::min_bits(values);
    if (bits != packed_.bits()) packed_ = PackedInts(values, bits);
    return bits;
}

std::vector<RangeEntry> RangeTable::entries() const {
    std::vector<RangeEntry> out(m_);
    for (std::size_t k = 0; k < m_; ++k) out[k] = entry(k);
    return out;
}

std::vector<std::byte> RangeTable::serialize() const {
    detail::ByteWriter w;
    w.reserve(kHeaderBytes + packed_.bytes());
    write_header(w, {TableMode::kRange, packed_.bits(), meaning_, exact_, m_, n_});
    write_values(w, packed_);
    return w.take();
}

RangeTable RangeTable::deserialize(std::span<const std::byte> blob) {
    detail::ByteReader r(blob);
    const Header h = read_header(r);
    if (h.mode != TableMode::kRange) throw WrongMode("blob holds a mid table, not a range table");
    const auto flat = read_values(r, 2 * h.m, h.bits);
    std::vector<RangeEntry> entries(h.m);
    for (std::size_t k = 0; k < h.m; ++k) entries[k] = {flat[2 * k], flat[2 * k + 1]};
    return RangeTable(entries, h.n, h.meaning, h.exact, h.bits);
}

MidTable::MidTable(std::span<const std::int64_t> deltas, std::size_t n, unsigned bits) : m_(deltas.size()), n_(n) {
    if (m_ == 0 || n_ == 0 || m_ > n_) throw InvalidM("mid table needs 1 <= m <= n");
    packed_ = PackedInts(deltas, bits == 0 ? PackedInts::min_bits(deltas) : bits);
}

void MidTable::reencode(unsigned bits) { packed_ = PackedInts(packed_.unpack(), bits); }

unsigned MidTable::select_entry_width() {
    const auto values = packed_.unpack();
    const unsigned bits = PackedInts::min_bits(values);
    if (bits != packed_.bits()) packed_ = PackedInts(values, bits);
    return bits;
}

std::vector<std::byte> MidTable::serialize() const {
    detail::ByteWriter w;
    w.reserve(kHeaderBytes + packed_.bytes());
    write_header(w, {TableMode::kMid, packed_.bits(), CountMeaning::kCardinality, false, m_, n_});
    write_values(w, packed_);
    return w.take();
}

MidTable MidTable::deserialize(std::span<const std::byte> blob) {
    detail::ByteReader r(blob);
    const Header h = read_header(r);
    if (h.mode != TableMode::kMid) throw WrongMode("blob holds a range table, not a mid table");
    const auto values = read_values(r, h.m, h.bits);
    return MidTable(values, h.n, h.bits);
}

TableMode peek_table_mode(std::span<const std::byte> blob) {
    detail::ByteReader r(blob);
    return read_header(r).mode;
}

}  // namespace shift_index
