#pragma once

// Independent reference implementations used only to cross-check the library.
// Deliberately slow and literal.

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lerw/loop_erase.hpp"
#include "lerw/path.hpp"
#include "lerw/tree.hpp"

namespace oracle {

// Loop erasure by the literal index recursion: s_0 is the last visit to
// lambda(0); given s_{i-1}, s_i is the last visit to lambda(s_{i-1} + 1);
// stop once lambda(s_i) equals the final vertex.
inline lerw::SimplePath erase_loops_literal(const lerw::LatticePath& path) {
    const size_t m = path.len();
    std::vector<lerw::LatticePoint> out;
    size_t s = 0;
    for (size_t j = 0; j <= m; ++j)
        if (path.verts[j] == path.verts[0]) s = j;
    out.push_back(path.vertex(s));
    while (!(path.verts[s] == path.verts[m])) {
        const auto& target = path.verts[s + 1];
        size_t next = s + 1;
        for (size_t j = s + 1; j <= m; ++j)
            if (path.verts[j] == target) next = j;
        s = next;
        out.push_back(path.vertex(s));
    }
    return lerw::path_from_vertices(out);
}

// Cut times by direct set intersection of prefix and suffix.
inline std::vector<size_t> cut_times_brute(const lerw::LatticePath& path) {
    std::vector<size_t> out;
    const size_t m = path.len();
    for (size_t t = 0; t <= m; ++t) {
        std::unordered_set<std::array<lerw::i64, 3>, lerw::CoordHash> prefix;
        for (size_t j = 0; j <= t; ++j) prefix.insert(path.verts[j]);
        bool cut = true;
        for (size_t j = t + 1; j <= m && cut; ++j)
            if (prefix.count(path.verts[j])) cut = false;
        if (cut) out.push_back(t);
    }
    return out;
}

// Tree distance by breadth-first search over the undirected tree edge set,
// with the boundary root represented as index -1.
inline int64_t tree_distance_bfs(const lerw::SpanningTree& tree, const lerw::LatticePoint& x,
                                 const lerw::LatticePoint& y) {
    auto ix = tree.find(x), iy = tree.find(y);
    if (!ix || !iy) std::abort();
    std::unordered_map<int32_t, std::vector<int32_t>> adj;
    for (size_t i = 0; i < tree.size(); ++i) {
        int32_t p = tree.parent[i];
        adj[(int32_t)i].push_back(p);
        adj[p].push_back((int32_t)i);
    }
    std::unordered_map<int32_t, int64_t> dist;
    std::deque<int32_t> queue{*ix};
    dist[*ix] = 0;
    while (!queue.empty()) {
        int32_t v = queue.front();
        queue.pop_front();
        if (v == *iy) return dist[v];
        for (int32_t w : adj[v])
            if (!dist.count(w) && w != *ix) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
    }
    std::abort();
}

} // namespace oracle
