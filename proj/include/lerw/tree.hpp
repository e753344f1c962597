#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lerw/domain.hpp"
#include "lerw/loop_erase.hpp"
#include "lerw/net.hpp"
#include "lerw/rng.hpp"

namespace lerw {

// Wired spanning tree of a bounded domain: every interior vertex stores its
// parent, and vertices whose parent is the collapsed boundary root record the
// concrete lattice point through which the branch left the domain.
struct SpanningTree {
    static constexpr int32_t kBoundary = -1;

    int n = 0;
    std::string domain_desc = "custom";
    std::vector<std::array<i64, 3>> verts;                     // lexicographic (x, y, z)
    std::vector<int32_t> parent;                               // index into verts, or kBoundary
    std::unordered_map<int32_t, std::array<i64, 3>> exits;     // boundary-parent vertex -> exit point
    std::unordered_map<std::array<i64, 3>, int32_t, CoordHash> index;

    size_t size() const { return verts.size(); }
    LatticePoint vertex(int32_t i) const {
        const auto& v = verts[i];
        return LatticePoint{v[0], v[1], v[2], n};
    }
    // Index of a vertex, or nullopt when it is not a domain vertex.
    std::optional<int32_t> find(const LatticePoint& p) const;
};

// Checks the structural invariants: one root, no cycles, every vertex reaches
// the boundary, every parent edge is a lattice edge, every exit point is a
// lattice neighbour lying outside the domain.  Returns an error description
// or empty string.
std::string validate_tree(const SpanningTree& tree, const Domain& domain);

// Wilson's algorithm rooted at the wired boundary: branch walks start from
// `ordering` (a permutation of the domain's lattice points) and are
// loop-erased when they first hit the current tree or leave the domain.
SpanningTree sample_wired_ust(const Domain& domain, const std::vector<LatticePoint>& ordering, RandomSource& rng);

// Convenience overload using the lexicographic ordering.
SpanningTree sample_wired_ust(const Domain& domain, RandomSource& rng);

// Parent-chain path from x to the boundary.  The abstract root is excluded;
// the final vertex is the concrete exit point just outside the domain, so for
// x = 0 the law of the result is the loop-erased walk from the origin.
SimplePath path_to_boundary(const SpanningTree& tree, const LatticePoint& x);

// Number of tree edges between two domain vertices (through their lowest
// common ancestor, possibly the boundary root).
int64_t tree_distance(const SpanningTree& tree, const LatticePoint& x, const LatticePoint& y);

// Number of tree edges from x to the boundary root.
int64_t tree_depth(const SpanningTree& tree, const LatticePoint& x);

// One stage-(ii) branch record of the net-ordered Wilson run.
struct NetWilsonRecord {
    int l = 0;                     // position in the tau sequence
    LatticePoint y;                // branch start y_l (nearest net point to gamma(tau_l))
    LatticePoint w;                // absorption point w_l (may lie outside the domain)
    uint64_t t = 0;                // absorption time t_l in walk steps
    uint64_t branch_len = 0;       // length of the loop-erased branch
    std::vector<std::array<i64, 3>> branch;  // loop-erased branch vertices, absorption point last
    double max_excursion = 0.0;    // max Euclidean distance of the walk from y_l
    bool within_sqrt_r = false;    // walk stayed inside the open ball B(y_l, sqrt r)   [exact]
    bool endpoint_on_window = false;  // w_l lies on gamma[tau_{l-1}, tau_{l+1}]        [exact]
    bool h_ok = false;             // both of the above
    bool i_ok = false;             // branch_len <= r^{1/3} 2^{beta n}
    bool gated = false;            // dist(y_l, boundary) >= 4 sqrt(r); only gated records
                                   // count toward the H and I events
};

// Net-ordered Wilson run: stage (i) seeds the tree with the given simple path
// gamma (origin to just outside the domain); stage (ii) adds one branch from
// the net point nearest to each gamma(tau_l), recording absorption data and
// the H/I test flags; stage (iii) finishes Wilson's algorithm over the
// remaining vertices in lexicographic order.  The window convention for the
// endpoint test is tau_{-1} = 0 and tau_{N+1} = len(gamma).
std::pair<SpanningTree, std::vector<NetWilsonRecord>> wilson_with_net(const Domain& domain, const SimplePath& gamma,
                                                                      const NetGrid& net,
                                                                      const std::vector<size_t>& tau_seq, double beta,
                                                                      RandomSource& rng);

} // namespace lerw
