#pragma once

#include <vector>

#include "lerw/domain.hpp"
#include "lerw/dyadic.hpp"
#include "lerw/point.hpp"

namespace lerw {

// Axis-aligned cubic grid covering a bounded domain: every lattice point of
// the domain lies strictly within distance `spacing` of some net point.
struct NetGrid {
    Dyadic spacing;                    // final spacing (may be finer than requested)
    Dyadic requested;                  // spacing asked for
    LatticePoint offset;               // grid anchor actually used
    std::vector<LatticePoint> points;  // sorted by (z, then y, then x)
    int halvings = 0;                  // densification rounds that were needed

    // Index of the net point nearest to p; ties broken by the storage order.
    size_t nearest(const LatticePoint& p) const;
};

// Builds the net and verifies the covering property exhaustively over the
// domain's lattice points.  If the origin-anchored grid fails (grid points
// near the boundary may fall outside the domain and get dropped), retries the
// 2^3 half-spacing offsets in lexicographic order, then halves the spacing.
//
// Errors: spacing below the lattice resolution 2^-n, unbounded domain, or an
// empty domain.
NetGrid build_net(const Dyadic& spacing, const Domain& domain);

} // namespace lerw
