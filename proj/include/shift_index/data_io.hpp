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

#ifndef SHIFT_INDEX_DATA_IO_HPP_
#define SHIFT_INDEX_DATA_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "shift_index/core.hpp"

namespace shift_index {

enum class Family : std::uint8_t { kUden, kUspr, kNorm, kLogn, kClusteredRealLike };

std::string_view family_name(Family family);
Family parse_family(std::string_view name);  // uden, uspr, norm, logn, clustered_real_like

struct DatasetSpec {
    Family family = Family::kUspr;
    std::size_t n = 0;
    unsigned width = 64;
    std::uint64_t seed = 1;
};

// Deterministic per spec. spec.width must equal the bit width of Key.
//   uden       0, 1, ..., n-1
//   uspr       uniform over the whole key width
//   norm       N(0, 1) clipped to [-8, 8] and mapped linearly onto the key width
//   logn       exp(N(0, 2)) times 1e9 (64-bit) or 1e4 (32-bit)
//   clustered_real_like
//              segments of very different density separated by gaps, with
//              dense bursts; keys are unique
template <KeyType Key>
SortedKeyColumn<Key> generate(const DatasetSpec& spec);

// Key file: u64 count, then count keys of 4 or 8 bytes, all little-endian.
// The width follows from the file size.
unsigned key_file_width(const std::filesystem::path& path);

// Reads a key file of width sizeof(Key) * 8. Unsorted input is sorted and
// reported through was_sorted.
template <KeyType Key>
SortedKeyColumn<Key> read_keys(const std::filesystem::path& path, bool* was_sorted = nullptr);

template <KeyType Key>
void write_keys(const std::filesystem::path& path, const SortedKeyColumn<Key>& column);

enum class WorkloadMode : std::uint8_t { kExistingKeys, kUniformRange, kMixed };

std::string_view workload_name(WorkloadMode mode);
WorkloadMode parse_workload(std::string_view name);  // keys, range, mixed

// existing_keys samples stored keys uniformly; uniform_range samples
// [min_key, max_key] uniformly; mixed flips a fair coin per query.
template <KeyType Key>
std::vector<Key> make_workload(const SortedKeyColumn<Key>& column, std::size_t count, WorkloadMode mode,
                               std::uint64_t seed);

}  // namespace shift_index

#endif  // SHIFT_INDEX_DATA_IO_HPP_
