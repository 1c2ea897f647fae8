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

#ifndef SHIFT_INDEX_MODELS_HPP_
#define SHIFT_INDEX_MODELS_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "shift_index/core.hpp"

namespace shift_index {

// A position predictor for a key column of n records.
//
// position(q) is the real-valued N*F(q) before truncation; predict(q) is the
// truncated index clamped to [0, n-1] and must equal clamp_index(position(q), n).
// A model declaring is_monotone() promises q1 <= q2 => position(q1) <= position(q2).
template <class M, class Key>
concept CdfModel = KeyType<Key> && requires(const M& m, Key q) {
    { m.position(q) } -> std::same_as<double>;
    { m.predict(q) } -> std::same_as<std::size_t>;
    { m.is_monotone() } -> std::same_as<bool>;
    { m.key_count() } -> std::same_as<std::size_t>;
};

enum class ModelKind : std::uint8_t {
    kInterpolation = 1,
    kLinearSpline = 2,
    kTwoLevelLinear = 3,
};

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // "im", "spline", "rmi2"

// Straight line between the minimum and maximum key ("interpolation as a model").
template <KeyType Key>
class InterpolationModel {
  public:
    static constexpr ModelKind kKind = ModelKind::kInterpolation;

    InterpolationModel(Key min_key, Key max_key, std::size_t n) : min_(min_key), max_(max_key), n_(n) {
        if (n == 0) throw InvalidArgument("model needs n >= 1");
        if (max_key < min_key) throw InvalidArgument("interpolation model needs min_key <= max_key");
        span_ = static_cast<double>(max_ - min_);
    }

    static InterpolationModel fit(const SortedKeyColumn<Key>& column) {
        return InterpolationModel(column.min_key(), column.max_key(), column.size());
    }

    [[nodiscard]] double position(Key q) const noexcept {
        if (q <= min_ || max_ == min_) return 0.0;
        return static_cast<double>(q - min_) * static_cast<double>(n_) / span_;
    }
    [[nodiscard]] std::size_t predict(Key q) const noexcept { return clamp_index(position(q), n_); }
    [[nodiscard]] bool is_monotone() const noexcept { return true; }
    [[nodiscard]] std::size_t key_count() const noexcept { return n_; }
    [[nodiscard]] Key min_key() const noexcept { return min_; }
    [[nodiscard]] Key max_key() const noexcept { return max_; }

  private:
    Key min_;
    Key max_;
    std::size_t n_;
    double span_;
};

template <KeyType Key>
struct SplineKnot {
    Key key;
    std::uint64_t rank;
    friend bool operator==(const SplineKnot&, const SplineKnot&) = default;
};

// Monotone piecewise-linear spline through (key, rank) knots.
template <KeyType Key>
class LinearSplineModel {
  public:
    static constexpr ModelKind kKind = ModelKind::kLinearSpline;
    using Knot = SplineKnot<Key>;

    // Knot keys must be strictly increasing and ranks non-decreasing.
    LinearSplineModel(std::vector<Knot> knots, std::size_t n);

    // Greedy corridor fit: one left-to-right pass, every indexed key predicted
    // within max_error of its rank.
    static LinearSplineModel fit(const SortedKeyColumn<Key>& column, std::uint64_t max_error);

    [[nodiscard]] double position(Key q) const noexcept {
        if (q <= knots_.front().key) return static_cast<double>(knots_.front().rank);
        if (q >= knots_.back().key) return static_cast<double>(knots_.back().rank);
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), q,
                                         [](Key v, const Knot& k) { return v < k.key; });
        const Knot& right = *it;
        const Knot& left = *(it - 1);
        const auto lo = static_cast<double>(left.rank);
        const auto hi = static_cast<double>(right.rank);
        const double pos = lo + static_cast<double>(q - left.key) * (hi - lo) / static_cast<double>(right.key - left.key);
        // Rounding must not leak across knots, or monotonicity breaks.
        return std::clamp(pos, lo, hi);
    }
    [[nodiscard]] std::size_t predict(Key q) const noexcept { return clamp_index(position(q), n_); }
    [[nodiscard]] bool is_monotone() const noexcept { return true; }
    [[nodiscard]] std::size_t key_count() const noexcept { return n_; }
    [[nodiscard]] std::span<const Knot> knots() const noexcept { return knots_; }

  private:
    std::vector<Knot> knots_;
    std::size_t n_;
};

// One linear piece: intercept + slope * (q - anchor).
template <KeyType Key>
struct LinearPiece {
    Key anchor = 0;
    double slope = 0.0;
    double intercept = 0.0;

    [[nodiscard]] double operator()(Key q) const noexcept {
        const double dx = q >= anchor ? static_cast<double>(q - anchor) : -static_cast<double>(anchor - q);
        return intercept + slope * dx;
    }
    friend bool operator==(const LinearPiece&, const LinearPiece&) = default;
};

// Root linear model picks one of L leaf linear models (RMI-style). Predictions
// may decrease across leaf boundaries, so the model is never declared monotone.
template <KeyType Key>
class TwoLevelLinearModel {
  public:
    static constexpr ModelKind kKind = ModelKind::kTwoLevelLinear;
    using Piece = LinearPiece<Key>;

    // root maps a key to a real leaf slot in [0, L).
    TwoLevelLinearModel(Piece root, std::vector<Piece> leaves, std::size_t n);

    // Least-squares root and leaves; leaf_count 0 picks n/64 clamped to [1, 2^20].
    static TwoLevelLinearModel fit(const SortedKeyColumn<Key>& column, std::size_t leaf_count = 0);

    [[nodiscard]] std::size_t leaf_of(Key q) const noexcept { return clamp_index(root_(q), leaves_.size()); }
    [[nodiscard]] double position(Key q) const noexcept {
        const double pos = leaves_[leaf_of(q)](q);
        return std::clamp(pos, 0.0, static_cast<double>(n_));
    }
    [[nodiscard]] std::size_t predict(Key q) const noexcept { return clamp_index(position(q), n_); }
    [[nodiscard]] bool is_monotone() const noexcept { return false; }
    [[nodiscard]] std::size_t key_count() const noexcept { return n_; }
    [[nodiscard]] const Piece& root() const noexcept { return root_; }
    [[nodiscard]] std::span<const Piece> leaves() const noexcept { return leaves_; }

  private:
    Piece root_;
    std::vector<Piece> leaves_;
    std::size_t n_;
};

template <KeyType Key>
using AnyModel = std::variant<InterpolationModel<Key>, LinearSplineModel<Key>, TwoLevelLinearModel<Key>>;

struct ModelParams {
    std::uint64_t spline_max_error = 32;
    std::size_t rmi_leaves = 0;
};

template <KeyType Key>
AnyModel<Key> fit_model(ModelKind kind, const SortedKeyColumn<Key>& column, const ModelParams& params = {});

template <KeyType Key>
ModelKind kind_of(const AnyModel<Key>& model) {
    return std::visit([](const auto& m) { return std::decay_t<decltype(m)>::kKind; }, model);
}

template <KeyType Key>
std::size_t model_bytes(const AnyModel<Key>& model);

// Self-describing little-endian blob: "SHMD", u16 version, u8 kind, u8 key bits,
// u64 n, u64 parameter count, then the parameters as u64 words.
template <KeyType Key>
std::vector<std::byte> encode_model(const AnyModel<Key>& model);

template <KeyType Key>
AnyModel<Key> decode_model(std::span<const std::byte> blob);

// Key width recorded in a model blob, without decoding the rest.
unsigned model_blob_key_bits(std::span<const std::byte> blob);

// Forwards to a model and counts evaluations. Test and diagnostics helper.
template <class Model>
class CountingModel {
  public:
    explicit CountingModel(const Model& inner) : inner_(&inner) {}

    template <class Key>
    [[nodiscard]] double position(Key q) const noexcept {
        ++evaluations_;
        return inner_->position(q);
    }
    template <class Key>
    [[nodiscard]] std::size_t predict(Key q) const noexcept {
        return clamp_index(position(q), inner_->key_count());
    }
    [[nodiscard]] bool is_monotone() const noexcept { return inner_->is_monotone(); }
    [[nodiscard]] std::size_t key_count() const noexcept { return inner_->key_count(); }
    [[nodiscard]] std::size_t evaluations() const noexcept { return evaluations_; }
    void reset() noexcept { evaluations_ = 0; }

  private:
    const Model* inner_;
    mutable std::size_t evaluations_ = 0;
};

}  // namespace shift_index

#endif  // SHIFT_INDEX_MODELS_HPP_
