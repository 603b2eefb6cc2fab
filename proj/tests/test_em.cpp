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

#include <random>

#include "doctest.h"
#include "emtopk/em.hpp"
#include "emtopk/encode.hpp"

using namespace emtopk;

TEST_CASE("config validation") {
    CHECK_THROWS_AS((EmConfig{1, 64, 64}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((EmConfig{16, 16, 64}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((EmConfig{16, 64, 0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((EmConfig{16, 64, 65}.validate()), std::invalid_argument);
    CHECK_NOTHROW((EmConfig{2, 4, 1}.validate()));
    CHECK((EmConfig{16, 1024, 48}.blockBits()) == 768);
}

TEST_CASE("reads and writes charge exactly one I/O each") {
    BlockStore s(EmConfig{8, 64, 64});
    BlockId a = s.alloc();
    BlockId b = s.alloc();
    CHECK(s.statsSnapshot() == IoStats{0, 0}); // alloc is free

    Block blk(8);
    blk.words[3] = 42;
    s.write(a, blk);
    CHECK(s.statsSnapshot() == IoStats{0, 1});
    CHECK(s.read(a).words[3] == 42);
    CHECK(s.read(b).words[3] == 0);
    CHECK(s.statsSnapshot() == IoStats{2, 1});

    s.statsReset();
    CHECK(s.statsSnapshot() == IoStats{0, 0});

    Block bad(7);
    CHECK_THROWS(s.write(a, bad));
    CHECK_THROWS(s.read(999));
}

TEST_CASE("multi-block payloads cost one I/O per spanned block") {
    BlockStore s(EmConfig{4, 32, 64});
    std::vector<BlockId> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(s.alloc());

    std::vector<Word> payload;
    for (Word w = 0; w < 10; ++w) payload.push_back(w * w + 1);
    s.writeWords(ids, payload); // 10 words over B=4 -> 3 blocks
    CHECK(s.statsSnapshot() == IoStats{0, 3});

    auto back = s.readWords(ids, payload.size());
    CHECK(s.statsSnapshot() == IoStats{3, 3});
    CHECK(back == payload);

    s.statsReset();
    s.writeWords(ids, std::span<const Word>{});
    CHECK(s.readWords(ids, 0).empty());
    CHECK(s.statsSnapshot() == IoStats{0, 0});
}

TEST_CASE("key encoding preserves order and roundtrips") {
    std::mt19937_64 rng(12345);
    std::vector<double> vals = {0.0, -0.0, 1.0, -1.0, 1e-300, -1e-300, 1e300, -1e300};
    for (int i = 0; i < 2000; ++i) {
        double m = double(rng() >> 11) * 0x1.0p-53;
        int e = int(rng() % 600) - 300;
        vals.push_back((rng() & 1 ? -m : m) * std::pow(10.0, e));
    }
    for (double v : vals) {
        Key k = encodeKey(v);
        CHECK(k != kNegInfKey);
        CHECK(decodeKey(k) == v);
    }
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        double a = vals[i], b = vals[i + 1];
        if (a == b) continue; // 0.0 and -0.0 may collide in code order
        CHECK((a < b) == (encodeKey(a) < encodeKey(b)));
    }
}
