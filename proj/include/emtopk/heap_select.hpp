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

#include <algorithm>
#include <queue>
#include <span>
#include <vector>

#include "emtopk/encode.hpp"

namespace emtopk {

/// Selection of the t largest keys from a forest of disk-resident
/// max-heaps. The forest roots are first organized into an in-memory
/// binary max-heap (linear-time make_heap); selection then runs a
/// best-first frontier that pops the maximum t times, expanding each
/// popped node's (at most 2) heap children plus, for roots, the two
/// make-heap array children. The frontier queue lives in memory, so the
/// only disk cost is expanding popped nodes: O(t) node reads no matter
/// how large the heap is.
///
/// Ref is a lightweight handle carrying its sort key in the member `key`
/// (larger = better). Expand(ref) returns the heap children of ref,
/// charging whatever I/O fetching them costs.

template <class Ref>
struct HeapRoot {
    std::vector<Ref> slots; // heapified: slots[i].key >= slots[2i+1].key, slots[2i+2].key
};

template <class Ref>
HeapRoot<Ref> concatHeaps(std::vector<Ref> roots) {
    std::make_heap(roots.begin(), roots.end(),
                   [](const Ref& a, const Ref& b) { return a.key < b.key; });
    return HeapRoot<Ref>{std::move(roots)};
}

struct SelectStats {
    std::size_t pops = 0;
    std::size_t expansions = 0;
};

template <class Ref, class Expand>
std::vector<Ref> selectTop(const HeapRoot<Ref>& heap, std::size_t t,
                           Expand&& expand, SelectStats* stats = nullptr) {
    struct Item {
        Key key;
        bool isSlot;
        std::size_t slot;
        Ref ref;
    };
    auto cmp = [](const Item& a, const Item& b) { return a.key < b.key; };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> pq(cmp);

    if (!heap.slots.empty())
        pq.push({heap.slots[0].key, true, 0, heap.slots[0]});

    std::vector<Ref> out;
    while (out.size() < t && !pq.empty()) {
        Item it = pq.top();
        pq.pop();
        out.push_back(it.ref);
        if (stats) ++stats->pops;
        if (it.isSlot) {
            for (std::size_t c : {2 * it.slot + 1, 2 * it.slot + 2})
                if (c < heap.slots.size())
                    pq.push({heap.slots[c].key, true, c, heap.slots[c]});
        }
        for (const Ref& child : expand(it.ref)) {
            pq.push({child.key, false, 0, child});
        }
        if (stats) ++stats->expansions;
    }
    return out;
}

} // namespace emtopk
