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

#include "shift_index/models.hpp"

#include <bit>
#include <string>

#include "byte_io.hpp"

namespace shift_index {

namespace {

constexpr std::string_view kModelMagic = "SHMD";
constexpr std::uint16_t kModelVersion = 1;

using i128 = __int128;

// Slope dy/dx with dx > 0, compared exactly.
struct Slope {
    i128 dy;
    i128 dx;
};

bool steeper(const Slope& a, const Slope& b) { return a.dy * b.dx > b.dy * a.dx; }

struct LeastSquares {
    double slope = 0.0;
    double intercept = 0.0;
};

// Fits rank ~ intercept + slope * (key - anchor) over keys[begin, end).
template <KeyType Key>
LeastSquares fit_line(std::span<const Key> keys, std::span<const std::uint64_t> ranks, Key anchor, double y_scale) {
    const auto n = static_cast<double>(keys.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        mx += static_cast<double>(keys[i] - anchor);
        my += static_cast<double>(ranks[i]) * y_scale;
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const double dx = static_cast<double>(keys[i] - anchor) - mx;
        sxy += dx * (static_cast<double>(ranks[i]) * y_scale - my);
        sxx += dx * dx;
    }
    LeastSquares ls;
    if (sxx > 0.0) ls.slope = sxy / sxx;
    ls.intercept = my - ls.slope * mx;
    return ls;
}

template <KeyType Key>
std::vector<std::uint64_t> lower_bound_ranks(std::span<const Key> keys) {
    std::vector<std::uint64_t> ranks(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) ranks[i] = (i > 0 && keys[i] == keys[i - 1]) ? ranks[i - 1] : i;
    return ranks;
}

std::uint64_t double_bits(double d) { return std::bit_cast<std::uint64_t>(d); }
double bits_double(std::uint64_t b) { return std::bit_cast<double>(b); }

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::kInterpolation: return "im";
        case ModelKind::kLinearSpline: return "spline";
        case ModelKind::kTwoLevelLinear: return "rmi2";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "im") return ModelKind::kInterpolation;
    if (name == "spline") return ModelKind::kLinearSpline;
    if (name == "rmi2") return ModelKind::kTwoLevelLinear;
    throw InvalidArgument("unknown model kind: " + std::string(name));
}

template <KeyType Key>
LinearSplineModel<Key>::LinearSplineModel(std::vector<Knot> knots, std::size_t n) : knots_(std::move(knots)), n_(n) {
    if (n_ == 0) throw InvalidArgument("model needs n >= 1");
    if (knots_.empty()) throw InvalidArgument("spline needs at least one knot");
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (knots_[i].key <= knots_[i - 1].key) throw InvalidArgument("spline knot keys must be strictly increasing");
        if (knots_[i].rank < knots_[i - 1].rank) throw InvalidArgument("spline knot ranks must be non-decreasing");
    }
}

template <KeyType Key>
LinearSplineModel<Key> LinearSplineModel<Key>::fit(const SortedKeyColumn<Key>& column, std::uint64_t max_error) {
    if (max_error < 1) throw InvalidArgument("spline max_error must be >= 1");
    const auto keys = column.keys();
    // Work in half-record units: the corridor is rank +/- (max_error - 1/2), which
    // leaves room for floating-point rounding when the prediction is truncated.
    const i128 margin = 2 * static_cast<i128>(max_error) - 1;

    std::vector<Knot> knots;
    knots.push_back({keys[0], 0});
    Knot base = knots.back();
    Knot prev = base;
    bool have_prev = false;
    Slope upper{0, 1};
    Slope lower{0, 1};

    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (keys[i] == keys[i - 1]) continue;
        const Knot point{keys[i], i};
        auto cone_to = [&](const Knot& from) {
            const i128 dx = static_cast<i128>(point.key - from.key);
            const i128 dy = 2 * (static_cast<i128>(point.rank) - static_cast<i128>(from.rank));
            return std::pair{Slope{dy + margin, dx}, Slope{dy - margin, dx}};
        };
        if (!have_prev) {
            std::tie(upper, lower) = cone_to(base);
        } else {
            const Slope exact{2 * (static_cast<i128>(point.rank) - static_cast<i128>(base.rank)),
                              static_cast<i128>(point.key - base.key)};
            if (steeper(exact, upper) || steeper(lower, exact)) {
                knots.push_back(prev);
                base = prev;
                std::tie(upper, lower) = cone_to(base);
            } else {
                const auto [up, lo] = cone_to(base);
                if (steeper(upper, up)) upper = up;
                if (steeper(lo, lower)) lower = lo;
            }
        }
        prev = point;
        have_prev = true;
    }
    if (have_prev) knots.push_back(prev);
    return LinearSplineModel(std::move(knots), keys.size());
}

template <KeyType Key>
TwoLevelLinearModel<Key>::TwoLevelLinearModel(Piece root, std::vector<Piece> leaves, std::size_t n)
    : root_(root), leaves_(std::move(leaves)), n_(n) {
    if (n_ == 0) throw InvalidArgument("model needs n >= 1");
    if (leaves_.empty()) throw InvalidArgument("two-level model needs at least one leaf");
}

template <KeyType Key>
TwoLevelLinearModel<Key> TwoLevelLinearModel<Key>::fit(const SortedKeyColumn<Key>& column, std::size_t leaf_count) {
    const auto keys = column.keys();
    const std::size_t n = keys.size();
    if (leaf_count == 0) leaf_count = std::clamp<std::size_t>(n / 64, 1, std::size_t{1} << 20);
    const auto ranks = lower_bound_ranks(keys);

    const Key min_key = keys.front();
    const auto root_fit = fit_line<Key>(keys, ranks, min_key, static_cast<double>(leaf_count) / static_cast<double>(n));
    Piece root{min_key, root_fit.slope, root_fit.intercept};

    std::vector<Piece> leaves(leaf_count);
    std::vector<bool> filled(leaf_count, false);
    std::size_t begin = 0;
    while (begin < n) {
        const std::size_t leaf = clamp_index(root(keys[begin]), leaf_count);
        std::size_t end = begin + 1;
        while (end < n && clamp_index(root(keys[end]), leaf_count) == leaf) ++end;
        const Key anchor = keys[begin];
        const auto ls = fit_line<Key>(keys.subspan(begin, end - begin), std::span(ranks).subspan(begin, end - begin), anchor, 1.0);
        leaves[leaf] = Piece{anchor, ls.slope, ls.intercept};
        filled[leaf] = true;
        begin = end;
    }
    // An empty leaf points at the first record of the next populated leaf.
    double next_start = static_cast<double>(n - 1);
    for (std::size_t l = leaf_count; l-- > 0;) {
        if (filled[l]) {
            next_start = std::max(0.0, leaves[l].intercept);
            continue;
        }
        leaves[l] = Piece{0, 0.0, next_start};
    }
    return TwoLevelLinearModel(root, std::move(leaves), n);
}

template <KeyType Key>
AnyModel<Key> fit_model(ModelKind kind, const SortedKeyColumn<Key>& column, const ModelParams& params) {
    switch (kind) {
        case ModelKind::kInterpolation: return InterpolationModel<Key>::fit(column);
        case ModelKind::kLinearSpline: return LinearSplineModel<Key>::fit(column, params.spline_max_error);
        case ModelKind::kTwoLevelLinear: return TwoLevelLinearModel<Key>::fit(column, params.rmi_leaves);
    }
    throw InvalidArgument("unknown model kind");
}

template <KeyType Key>
std::size_t model_bytes(const AnyModel<Key>& model) {
    struct Visitor {
        std::size_t operator()(const InterpolationModel<Key>&) const { return 2 * sizeof(Key) + sizeof(double); }
        std::size_t operator()(const LinearSplineModel<Key>& m) const {
            return m.knots().size() * (sizeof(Key) + sizeof(std::uint64_t));
        }
        std::size_t operator()(const TwoLevelLinearModel<Key>& m) const {
            return (m.leaves().size() + 1) * (sizeof(Key) + 2 * sizeof(double));
        }
    };
    return std::visit(Visitor{}, model);
}

template <KeyType Key>
std::vector<std::byte> encode_model(const AnyModel<Key>& model) {
    std::vector<std::uint64_t> params;
    std::size_t n = 0;
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            n = m.key_count();
            if constexpr (std::is_same_v<M, InterpolationModel<Key>>) {
                params = {m.min_key(), m.max_key()};
            } else if constexpr (std::is_same_v<M, LinearSplineModel<Key>>) {
                params.push_back(m.knots().size());
                for (const auto& k : m.knots()) {
                    params.push_back(k.key);
                    params.push_back(k.rank);
                }
            } else {
                auto put_piece = [&](const LinearPiece<Key>& p) {
                    params.push_back(p.anchor);
                    params.push_back(double_bits(p.slope));
                    params.push_back(double_bits(p.intercept));
                };
                params.push_back(m.leaves().size());
                put_piece(m.root());
                for (const auto& leaf : m.leaves()) put_piece(leaf);
            }
        },
        model);

    detail::ByteWriter w;
    w.reserve(24 + 8 * params.size());
    w.put_bytes(kModelMagic);
    w.u16(kModelVersion);
    w.u8(static_cast<std::uint8_t>(kind_of(model)));
    w.u8(static_cast<std::uint8_t>(sizeof(Key) * 8));
    w.u64(n);
    w.u64(params.size());
    for (auto p : params) w.u64(p);
    return w.take();
}

unsigned model_blob_key_bits(std::span<const std::byte> blob) {
    detail::ByteReader r(blob);
    r.expect_magic(kModelMagic);
    if (r.u16() != kModelVersion) throw BadFormat("unsupported model blob version");
    r.u8();
    return r.u8();
}

template <KeyType Key>
AnyModel<Key> decode_model(std::span<const std::byte> blob) {
    detail::ByteReader r(blob);
    r.expect_magic(kModelMagic);
    if (r.u16() != kModelVersion) throw BadFormat("unsupported model blob version");
    const auto kind = static_cast<ModelKind>(r.u8());
    if (r.u8() != sizeof(Key) * 8) throw BadWidth("model blob key width does not match");
    const auto n = static_cast<std::size_t>(r.u64());
    const auto count = r.u64();
    if (count > r.remaining() / 8) throw TruncatedFile("model blob parameter array truncated");
    std::vector<std::uint64_t> p(count);
    for (auto& v : p) v = r.u64();

    auto need = [&](std::size_t words) {
        if (p.size() != words) throw BadFormat("model blob parameter count mismatch");
    };
    switch (kind) {
        case ModelKind::kInterpolation:
            need(2);
            return InterpolationModel<Key>(static_cast<Key>(p[0]), static_cast<Key>(p[1]), n);
        case ModelKind::kLinearSpline: {
            if (p.empty()) throw BadFormat("spline blob without knot count");
            need(1 + 2 * p[0]);
            std::vector<SplineKnot<Key>> knots(p[0]);
            for (std::size_t i = 0; i < knots.size(); ++i) knots[i] = {static_cast<Key>(p[1 + 2 * i]), p[2 + 2 * i]};
            return LinearSplineModel<Key>(std::move(knots), n);
        }
        case ModelKind::kTwoLevelLinear: {
            if (p.empty()) throw BadFormat("two-level blob without leaf count");
            need(1 + 3 * (p[0] + 1));
            auto piece = [&](std::size_t at) {
                return LinearPiece<Key>{static_cast<Key>(p[at]), bits_double(p[at + 1]), bits_double(p[at + 2])};
            };
            std::vector<LinearPiece<Key>> leaves(p[0]);
            for (std::size_t i = 0; i < leaves.size(); ++i) leaves[i] = piece(4 + 3 * i);
            return TwoLevelLinearModel<Key>(piece(1), std::move(leaves), n);
        }
    }
    throw BadFormat("unknown model kind tag");
}

#define SHIFT_INDEX_INSTANTIATE(K)                                                                          \
    template class LinearSplineModel<K>;                                                                   \
    template class TwoLevelLinearModel<K>;                                                                 \
    template AnyModel<K> fit_model<K>(ModelKind, const SortedKeyColumn<K>&, const ModelParams&);           \
    template std::size_t model_bytes<K>(const AnyModel<K>&);                                               \
    template std::vector<std::byte> encode_model<K>(const AnyModel<K>&);                                   \
    template AnyModel<K> decode_model<K>(std::span<const std::byte>);

SHIFT_INDEX_INSTANTIATE(std::uint32_t)
SHIFT_INDEX_INSTANTIATE(std::uint64_t)

#undef SHIFT_INDEX_INSTANTIATE

}  // namespace shift_index
