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

#ifndef SHIFT_INDEX_CORE_HPP_
#define SHIFT_INDEX_CORE_HPP_

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shift_index {

// Position of the first key >= query, in [0, N]. N means "past the end".
using Rank = std::size_t;

template <class K>
concept KeyType = std::same_as<K, std::uint32_t> || std::same_as<K, std::uint64_t>;

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define SHIFT_INDEX_ERROR(Name)                \
    class Name : public Error {                \
      public:                                  \
        using Error::Error;                    \
    }

SHIFT_INDEX_ERROR(InvalidArgument);
SHIFT_INDEX_ERROR(NonMonotoneModel);
SHIFT_INDEX_ERROR(InvalidM);
SHIFT_INDEX_ERROR(WrongMode);
SHIFT_INDEX_ERROR(ClockResolution);
SHIFT_INDEX_ERROR(WidthOverflow);
SHIFT_INDEX_ERROR(TruncatedFile);
SHIFT_INDEX_ERROR(BadWidth);
SHIFT_INDEX_ERROR(BadFormat);

#undef SHIFT_INDEX_ERROR

// The single definition of the [.] bracket used for predicted positions and
// averaged drifts: truncation toward zero. For the non-negative positions a
// model produces this is the floor.
inline std::int64_t truncate(double real) { return static_cast<std::int64_t>(real); }

// Clamps a real-valued position into a valid index in [0, n-1]. NaN maps to 0.
inline std::size_t clamp_index(double position, std::size_t n) {
    if (!(position > 0.0)) return 0;
    const auto last = static_cast<double>(n - 1);
    if (position >= last) return n - 1;
    return static_cast<std::size_t>(truncate(position));
}

inline std::size_t clamp_index(std::int64_t position, std::size_t n) {
    if (position <= 0) return 0;
    const auto last = static_cast<std::int64_t>(n - 1);
    return static_cast<std::size_t>(std::min(position, last));
}

// Bytes per record in the payload-carrying layout. The hot key array never
// stores payloads; this is accounting only.
enum class PayloadConvention : std::uint8_t {
    kEightBytes = 8,   // "64-bit payloads"
    kSixtyFourBytes = 64,
};

// Sorted (non-decreasing) key array with lower-bound rank semantics.
// Immutable after construction.
template <KeyType Key>
class SortedKeyColumn {
  public:
    using key_type = Key;

    explicit SortedKeyColumn(std::vector<Key> keys, PayloadConvention payload = PayloadConvention::kEightBytes)
        : keys_(std::move(keys)), payload_(payload) {
        if (keys_.empty()) throw InvalidArgument("key column must hold at least one key");
        if (!std::is_sorted(keys_.begin(), keys_.end())) throw InvalidArgument("key column is not sorted");
    }

    // Sorts the input first. `was_sorted` reports whether the input already was.
    static SortedKeyColumn from_unsorted(std::vector<Key> keys, bool* was_sorted = nullptr) {
        const bool sorted = std::is_sorted(keys.begin(), keys.end());
        if (!sorted) std::sort(keys.begin(), keys.end());
        if (was_sorted != nullptr) *was_sorted = sorted;
        return SortedKeyColumn(std::move(keys));
    }

    [[nodiscard]] std::size_t size() const noexcept { return keys_.size(); }
    [[nodiscard]] Key operator[](std::size_t i) const noexcept { return keys_[i]; }
    [[nodiscard]] const Key* data() const noexcept { return keys_.data(); }
    [[nodiscard]] std::span<const Key> keys() const noexcept { return keys_; }
    [[nodiscard]] Key min_key() const noexcept { return keys_.front(); }
    [[nodiscard]] Key max_key() const noexcept { return keys_.back(); }
    [[nodiscard]] static constexpr unsigned key_bits() noexcept { return sizeof(Key) * 8; }

    [[nodiscard]] PayloadConvention payload() const noexcept { return payload_; }
    [[nodiscard]] std::size_t record_bytes() const noexcept {
        return sizeof(Key) + static_cast<std::size_t>(payload_);
    }

    // Rank of the key stored at position i: the first position holding an equal key.
    [[nodiscard]] Rank rank_at(std::size_t i) const noexcept {
        const Key k = keys_[i];
        while (i > 0 && keys_[i - 1] == k) --i;
        return i;
    }

  private:
    std::vector<Key> keys_;
    PayloadConvention payload_;
};

// Reference lower bound: min{i : keys[i] >= query}, or N.
template <KeyType Key>
Rank lower_bound_oracle(const SortedKeyColumn<Key>& column, Key query) {
    const auto keys = column.keys();
    return static_cast<Rank>(std::lower_bound(keys.begin(), keys.end(), query) - keys.begin());
}

}  // namespace shift_index

#endif  // SHIFT_INDEX_CORE_HPP_
