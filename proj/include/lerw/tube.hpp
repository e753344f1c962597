#pragma once

#include <vector>

#include "lerw/domain.hpp"
#include "lerw/dyadic.hpp"
#include "lerw/point.hpp"

namespace lerw {

// Dyadic tube geometry along the +x axis at lattice scale n: cross-section
// half-width 2^-m, sub-grid width q = 2^-(m+m0), and the plane family
// a_i = 2^-m (2i - 1).  Populated for i = 0 .. 2*m0+1.
//
// All coordinates are exact multiples of 2^-(m+m0), hence of 2^-n.
struct TubePartition {
    int m = 0;
    int m0 = 0;
    int n = 0;
    Dyadic q;                // 2^-(m+m0)
    std::vector<Dyadic> a;   // a[i] = 2^-m (2i - 1)

    Dyadic transverse() const { return Dyadic(1, m); }

    // a_i for arbitrary integer index (the stored vector covers 0..2*m0+1).
    Dyadic plane_coord(int i) const { return Dyadic(2LL * i - 1, m); }
    // a_x for half-integer index x = twice_i / 2, i.e. 2^-m (twice_i - 1).
    Dyadic plane_coord_half(int twice_i) const { return Dyadic((long long)twice_i - 1, m); }

    // Q_i = H[a_i, a_{i+1}]: the closed cube of side 2^-(m-1) split off by
    // consecutive planes.
    Domain cube(int i) const;

    // Slab H with chosen end openness and the tube's transverse bound.
    Domain slab(const Dyadic& lo, bool lo_open, const Dyadic& hi, bool hi_open) const;

    // H(x): the transverse square of half-width 2^-m inside the plane x1 = x.
    Domain plane_piece(const Dyadic& x) const;

    // G(x): the concentric square of half-width 2^-(m+1) inside that plane.
    Domain face(const Dyadic& x) const;

    // H_w: |y1 - w1| <= q and |y2 - w2|, |y3 - w3| <= 2^-m around a vertex w.
    Domain thin_cuboid(const LatticePoint& w) const;

    // True when the dyadic value is an exact multiple of 2^-n, so hitting the
    // plane x1 = x can be read off by coordinate equality.
    bool snapped(const Dyadic& x) const { return x.representable_at(n); }
};

// Errors: m0 < 2, m < 1, or n < m + m0 (coordinates would leave the lattice).
TubePartition build_tube_partition(int m, int m0, int n);

} // namespace lerw
