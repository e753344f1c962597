#pragma once

#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lerw/path.hpp"
#include "lerw/tube.hpp"

namespace lerw {

// A path with all vertices distinct.  Same carrier as LatticePath; produced
// by erase_loops and friends, checked by is_simple().
using SimplePath = LatticePath;

// Chronological loop erasure: walk through the path once and drop every loop
// at the moment it closes.  The result is simple, starts and ends where the
// input does, and its vertex set is contained in the input's.
SimplePath erase_loops(const LatticePath& path);

// All times t with lambda[0,t] and lambda[t+1,end] vertex-disjoint, sorted.
// A simple path reports every index; computed in one pass via last-occurrence
// indices.
std::vector<size_t> cut_times(const LatticePath& path);

// Splits a path at a cut time k into (LE(lambda[0,k]), LE(lambda[k,end])).
// Their concatenation equals LE(lambda) exactly.  Errors when k is not a cut
// time.
std::pair<SimplePath, SimplePath> decompose_at_cut(const LatticePath& path, size_t k);

// Nice cut times of a walk inside tube cube i (i >= 1).  Writing t(x) for the
// first time the walk meets the transverse-bounded plane piece H(x), an index
// k qualifies when
//   (i)   t(a_i + q/2) <= k <= t(a_i + q),
//   (ii)  S[t(a_i), k] and S[k+1, t(a_{i+1})] are vertex-disjoint,
//   (iii) S(k) lies in the slab H[a_i + q/2, a_i + q],
//   (iv)  S[k, t(a_{i+1})] never returns to H(a_i).
// Errors when a required plane-hit time does not exist or the window planes
// are not on the lattice.
std::vector<size_t> nice_cut_times(const LatticePath& path, const TubePartition& tube, int i);

// Local variant confined to the first cube.  An index k in the same window
// [t(a_1 + q/2), t(a_1 + q)] qualifies when
//   (ii')  S[t(a_1), k] and S[k+1, t(a_1 + 2q)] are vertex-disjoint, and
//          S[t(a_1), k] never meets H(a_1 - q),
//   (iii') S(k) lies in H[a_1 + q/2, a_1 + q],
//   (iv')  S[k, t(a_1 + 2q)] never meets H(a_1), and
//          S[t(a_1), t(a_1 + 2q)] stays inside the open ball of radius 4q
//          around S(t(a_1)).
std::vector<size_t> local_nice_cut_times(const LatticePath& path, const TubePartition& tube);

// Bundled cut structure of one walk against one tube.
struct CutReport {
    std::vector<size_t> cuts;                               // plain cut times
    std::vector<std::pair<int, std::vector<size_t>>> nice;  // cube index -> nice cut times
    std::vector<size_t> local_nice;                         // cube 1 local variant
};

// Streaming loop erasure: feed walk vertices one at a time and keep the
// loop-erasure of the prefix.  Equivalent to erase_loops on the accumulated
// path but without storing the raw walk.
class OnlineLoopErase {
public:
    explicit OnlineLoopErase(const LatticePoint& start) { reset(start); }

    void reset(const LatticePoint& start);

    // Appends the next walk vertex (must be a lattice neighbour of the
    // previous input vertex).
    void push(i64 x, i64 y, i64 z);
    void push(const LatticePoint& p) { push(p.x, p.y, p.z); }

    size_t len() const { return le_.size() - 1; }
    const std::vector<std::array<i64, 3>>& vertices() const { return le_; }

    // Materializes the current loop-erasure as a path.
    SimplePath path() const;

private:
    int n_ = 0;
    std::vector<std::array<i64, 3>> le_;
    std::unordered_map<std::array<i64, 3>, size_t, CoordHash> pos_;
};

// Open-addressing variant of OnlineLoopErase for hot sampling loops.  Keys
// are coordinates packed into one 64-bit word (21 bits per axis, so every
// coordinate must stay below 2^20 in absolute value); entries orphaned by a
// loop closure are never deleted, just detected as stale by re-checking the
// live stack, which keeps probe chains intact.  Same outputs as
// OnlineLoopErase, several times faster.
class FastLoopErase {
public:
    explicit FastLoopErase(const LatticePoint& start) { reset(start); }

    void reset(const LatticePoint& start);
    void push(i64 x, i64 y, i64 z);
    void push(const LatticePoint& p) { push(p.x, p.y, p.z); }

    size_t len() const { return le_.size() - 1; }
    const std::vector<std::array<i64, 3>>& vertices() const { return le_; }
    SimplePath path() const;

private:
    void grow();

    int n_ = 0;
    std::vector<std::array<i64, 3>> le_;
    std::vector<uint64_t> keys_;   // packed coordinate or kEmptySlot
    std::vector<uint32_t> idx_;    // candidate index into le_ (may be stale)
    size_t mask_ = 0;
    size_t occupied_ = 0;          // slots holding any entry, live or stale
};

} // namespace lerw
