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

#include <cassert>
#include <cstdint>
#include <vector>

namespace emtopk {

// MSB-first bit packing into 64-bit words. Fields are written most
// significant bit first, and bit 0 of the stream is the top bit of word 0.

class BitWriter {
  public:
    void put(std::uint64_t value, unsigned bits) {
        assert(bits <= 64);
        assert(bits == 64 || value < (1ULL << bits));
        for (unsigned i = bits; i-- > 0;)
            putBit((value >> i) & 1);
    }

    std::size_t bitCount() const { return nbits_; }
    const std::vector<std::uint64_t>& words() const { return words_; }

  private:
    void putBit(std::uint64_t b) {
        std::size_t w = nbits_ / 64, off = nbits_ % 64;
        if (off == 0) words_.push_back(0);
        words_[w] |= b << (63 - off);
        ++nbits_;
    }

    std::vector<std::uint64_t> words_;
    std::size_t nbits_ = 0;
};

class BitReader {
  public:
    BitReader(const std::uint64_t* words, std::size_t nbits)
        : words_(words), nbits_(nbits) {}

    std::uint64_t get(unsigned bits) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < bits; ++i)
            v = (v << 1) | getBit();
        return v;
    }

    std::size_t position() const { return pos_; }

  private:
    std::uint64_t getBit() {
        assert(pos_ < nbits_);
        std::size_t w = pos_ / 64, off = pos_ % 64;
        ++pos_;
        return (words_[w] >> (63 - off)) & 1;
    }

    const std::uint64_t* words_;
    std::size_t nbits_;
    std::size_t pos_ = 0;
};

inline unsigned bitsFor(std::uint64_t maxValue) {
    unsigned b = 0;
    while ((maxValue >> b) != 0) ++b;
    return b == 0 ? 1 : b;
}

inline unsigned floorLog2(std::uint64_t v) {
    assert(v > 0);
    unsigned b = 0;
    while (v >>= 1) ++b;
    return b;
}

inline unsigned ceilLog2(std::uint64_t v) {
    assert(v > 0);
    unsigned f = floorLog2(v);
    return (1ULL << f) == v ? f : f + 1;
}

} // namespace emtopk
