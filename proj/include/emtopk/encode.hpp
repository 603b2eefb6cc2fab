// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <limits>

namespace emtopk {

// Total-order-preserving encoding of doubles into unsigned words.
// Negative values get their bits flipped, non-negative values get the sign
// bit set, so unsigned comparison of the codes matches double comparison.
// Code 0 is reserved as the "minus infinity" sentinel (only the bit pattern
// of a sign-set all-ones NaN would map there, and NaN inputs are rejected
// at the API edges).

using Key = std::uint64_t;

inline constexpr Key kNegInfKey = 0;
inline constexpr Key kMaxKey = std::numeric_limits<std::uint64_t>::max();

inline Key encodeKey(double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if (bits & 0x8000000000000000ULL)
        return ~bits;
    return bits | 0x8000000000000000ULL;
}

inline double decodeKey(Key k) {
    if (k & 0x8000000000000000ULL)
        return std::bit_cast<double>(k & 0x7FFFFFFFFFFFFFFFULL);
    return std::bit_cast<double>(~k);
}

/// A scored element as a 2d point: x is the element's coordinate code,
/// y its score code. Both are distinct across the live set.
struct Point {
    Key x;
    Key y;
    bool operator==(const Point&) const = default;
};

} // namespace emtopk
