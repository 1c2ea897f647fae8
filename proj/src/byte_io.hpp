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

#ifndef SHIFT_INDEX_SRC_BYTE_IO_HPP_
#define SHIFT_INDEX_SRC_BYTE_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "shift_index/core.hpp"

namespace shift_index::detail {

// Little-endian writer over a growing byte buffer.
class ByteWriter {
  public:
    void put_bytes(std::string_view s) {
        for (char c : s) out_.push_back(static_cast<std::byte>(c));
    }
    void put_le(std::uint64_t v, unsigned bytes) {
        for (unsigned i = 0; i < bytes; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }
    void u8(std::uint8_t v) { put_le(v, 1); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void reserve(std::size_t n) { out_.reserve(n); }

    [[nodiscard]] std::vector<std::byte> take() { return std::move(out_); }

  private:
    std::vector<std::byte> out_;
};

class ByteReader {
  public:
    explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

    void expect_magic(std::string_view magic) {
        need(magic.size());
        for (std::size_t i = 0; i < magic.size(); ++i) {
            if (static_cast<char>(in_[pos_ + i]) != magic[i]) throw BadFormat("bad magic, expected " + std::string(magic));
        }
        pos_ += magic.size();
    }
    std::uint64_t get_le(unsigned bytes) {
        need(bytes);
        std::uint64_t v = 0;
        for (unsigned i = 0; i < bytes; ++i) v |= std::to_integer<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += bytes;
        return v;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }

    [[nodiscard]] std::size_t remaining() const noexcept { return in_.size() - pos_; }

  private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw TruncatedFile("unexpected end of data");
    }

    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

// Sign-extends the low `bits` of v.
inline std::int64_t sign_extend(std::uint64_t v, unsigned bits) {
    if (bits == 64) return static_cast<std::int64_t>(v);
    const std::uint64_t m = std::uint64_t{1} << (bits - 1);
    v &= (std::uint64_t{1} << bits) - 1;
    return static_cast<std::int64_t>((v ^ m) - m);
}

}  // namespace shift_index::detail

#endif  // SHIFT_INDEX_SRC_BYTE_IO_HPP_
