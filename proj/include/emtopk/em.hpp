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
#include <span>
#include <stdexcept>
#include <vector>

namespace emtopk {

using Word = std::uint64_t;

/// Parameters of the simulated external-memory machine.
/// B is the number of words per block, M the memory budget in words,
/// wordBits the usable bits per word (bit-budget checks only; words are
/// stored as 64-bit integers regardless).
struct EmConfig {
    std::size_t B = 16;
    std::size_t M = 1024;
    std::size_t wordBits = 64;

    void validate() const {
        if (B < 2) throw std::invalid_argument("EmConfig: B must be >= 2");
        if (M < 2 * B) throw std::invalid_argument("EmConfig: M must be >= 2B");
        if (wordBits < 1 || wordBits > 64)
            throw std::invalid_argument("EmConfig: wordBits must be in [1,64]");
    }

    std::size_t blockBits() const { return B * wordBits; }
};

struct IoStats {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;

    std::uint64_t total() const { return reads + writes; }
    IoStats operator-(const IoStats& o) const {
        return IoStats{reads - o.reads, writes - o.writes};
    }
    bool operator==(const IoStats&) const = default;
};

using BlockId = std::uint64_t;

/// One B-word block of opaque bit patterns.
struct Block {
    std::vector<Word> words;

    explicit Block(std::size_t b) : words(b, 0) {}
};

/// Simulated disk of B-word blocks with exact I/O accounting.
/// Every read() and write() charges exactly one I/O; alloc() is free and
/// never reuses an identifier. A store is used by a single logical thread
/// at a time.
class BlockStore {
  public:
    explicit BlockStore(EmConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    const EmConfig& config() const { return cfg_; }
    std::size_t B() const { return cfg_.B; }

    BlockId alloc() {
        blocks_.emplace_back(cfg_.B);
        return blocks_.size() - 1;
    }

    const Block& read(BlockId id) {
        check(id);
        ++stats_.reads;
        return blocks_[id];
    }

    void write(BlockId id, const Block& b) {
        check(id);
        if (b.words.size() != cfg_.B)
            throw std::invalid_argument("BlockStore::write: block has wrong word count");
        ++stats_.writes;
        blocks_[id] = b;
    }

    // Convenience for multi-block payloads: each spanned block costs one I/O.
    void writeWords(std::span<const BlockId> ids, std::span<const Word> words) {
        std::size_t need = words.empty() ? 0 : (words.size() + cfg_.B - 1) / cfg_.B;
        assert(need <= ids.size());
        for (std::size_t i = 0; i < need; ++i) {
            Block b(cfg_.B);
            for (std::size_t w = 0; w < cfg_.B; ++w) {
                std::size_t pos = i * cfg_.B + w;
                b.words[w] = pos < words.size() ? words[pos] : 0;
            }
            write(ids[i], b);
        }
    }

    std::vector<Word> readWords(std::span<const BlockId> ids, std::size_t count) {
        std::size_t need = count == 0 ? 0 : (count + cfg_.B - 1) / cfg_.B;
        assert(need <= ids.size());
        std::vector<Word> out;
        out.reserve(need * cfg_.B);
        for (std::size_t i = 0; i < need; ++i) {
            const Block& b = read(ids[i]);
            out.insert(out.end(), b.words.begin(), b.words.end());
        }
        out.resize(count);
        return out;
    }

    IoStats statsSnapshot() const { return stats_; }
    void statsReset() { stats_ = IoStats{}; }

    std::size_t allocatedBlocks() const { return blocks_.size(); }

  private:
    void check(BlockId id) const {
        if (id >= blocks_.size())
            throw std::logic_error("BlockStore: unknown block id");
    }

    EmConfig cfg_;
    std::vector<Block> blocks_;
    IoStats stats_;
};

} // namespace emtopk
