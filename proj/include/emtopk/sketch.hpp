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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "emtopk/em.hpp"
#include "emtopk/encode.hpp"

namespace emtopk {

// Approximation constant of union selection from logarithmic sketches:
// the returned value's union rank is guaranteed (and test-enforced) to lie
// in [k, kSketchRatio * k).
inline constexpr std::size_t kSketchRatio = 8;

/// Logarithmic sketch of a value set L: entry j (1-based) is an element of
/// L whose descending rank in L falls in the window [2^(j-1), 2^j).
/// Fresh pivots are placed at rank floor(3/2 * 2^(j-1)) (clamped to the
/// window), so Omega(2^j) updates are needed to push a pivot out of its
/// window again.
struct Sketch {
    std::vector<Key> pivots; // strictly decreasing values, entry j at index j-1
};

/// Number of sketch entries for a set of the given size.
inline std::size_t sketchLength(std::size_t setSize) {
    if (setSize == 0) return 0;
    std::size_t np = 1;
    while ((std::size_t{1} << np) <= setSize) ++np;
    return np; // floor(lg size) + 1
}

/// Preferred local rank of pivot j (1-based), clamped to its window and to
/// the set size.
std::size_t pivotHomeRank(std::size_t j, std::size_t setSize);

/// Builds a sketch from the values of L sorted descending.
Sketch buildSketch(std::span<const Key> sortedDesc);

/// True iff every pivot of the sketch sits in its rank window with respect
/// to the given (descending-sorted) set contents.
bool sketchWindowsValid(const Sketch& s, std::span<const Key> sortedDesc);

/// Selects a value whose rank in the union of the sketched sets is in
/// [k, kSketchRatio*k), or kNegInfKey when every pivot's certified lower
/// bound falls short of k (possible only if the union is smaller than 2k).
/// Reads nothing: the sketches are memory-resident; callers charge the one
/// block read that brings a compressed sketch set into memory.
Key sketchUnionSelect(std::span<const Sketch> sketches, double k);

/// Per-pivot rank pair of a compressed sketch set (1-based ranks).
struct PivotRanks {
    std::uint32_t globalRank;
    std::uint32_t localRank;
    bool operator==(const PivotRanks&) const = default;
};

/// Bit-packed sketch set of an (f,l)-group: per set, its size and the
/// (global rank, local rank) pair of every pivot. Fits in one block for
/// admissible parameters.
struct CompressedSketchSet {
    std::size_t f = 0; // number of sets
    std::size_t l = 0; // per-set capacity
    std::vector<std::uint32_t> sizes;           // |G_i|, f entries
    std::vector<std::vector<PivotRanks>> sets;  // sets[i].size() == sketchLength(sizes[i])

    static CompressedSketchSet empty(std::size_t f, std::size_t l);

    /// Exact packed size in bits for the current contents.
    std::size_t packedBits() const;

    /// Upper bound on packedBits over all contents for (f, l).
    static std::size_t worstCaseBits(std::size_t f, std::size_t l);

    /// The f*(floor(lg l)+1)*2*ceil(lg(fl)) budget formula; construction is
    /// rejected when either this or worstCaseBits exceeds the block budget.
    static std::size_t budgetFormulaBits(std::size_t f, std::size_t l);

    std::vector<Word> pack() const;
    static CompressedSketchSet unpack(std::span<const Word> words,
                                      std::size_t f, std::size_t l);

    bool operator==(const CompressedSketchSet&) const = default;
};

/// Union selection in rank space over sketches [i1, i2] (0-based,
/// inclusive) of a compressed sketch set: returns the winning pivot's
/// global rank, or nullopt for the -infinity outcome.
std::optional<std::uint32_t> compressedUnionSelect(const CompressedSketchSet& css,
                                                   std::size_t i1, std::size_t i2,
                                                   double k);

} // namespace emtopk
