#pragma once

#include <cstdint>
#include <vector>

#include "lerw/loop_erase.hpp"
#include "lerw/path.hpp"
#include "lerw/tube.hpp"
#include "lerw/tube_events.hpp"

namespace lerw {

// Events of a walk conditioned to avoid a simple path, evaluated against a
// tube re-anchored outside the box the path lives in.
//
// Geometry: the prefix lambda is a simple path from the origin inside the
// closed cube of half-width M*2^-m, ending at a boundary point z on the +x
// face.  The anchor is w = z + (100*m0*2^-m, 0, 0); every tube object below
// is the partition's translated by w.  l denotes the half-line from z in the
// +x direction; the distance of a point p to l is the transverse distance
// when p_1 >= z_1 and |p - z| otherwise.
//
// Times on the conditioned walk X (first indices, -1 when never):
//   tau0   |X - z|_inf reaches (100*m0 - 1)*2^-m,
//   tau1   X meets w + H(a_1),
//   tau2   X meets w + H(a_{2m0+1}),
//   tau3   first j >= tau1 with |X(j) - X(tau1)| >= 40*m0*2^-m,
//   exit_time   first |X| >= 1 (the walk must reach it).
//
// A good cut is an index k in [tau1, tau3] with
//   (i)   X[tau1, k] and X[k+1, tau3] vertex-disjoint,
//   (ii)  X[tau1, k] inside w + H[0, a_2 + q], X(k) inside
//         w + H[a_2 + q/2, a_2 + q], and X[k, tau2] inside
//         w + H[a_2, a_{2m0+1}],
//   (iii) X[tau2, tau3] avoids the open ball B(z, 103*m0*2^-m),
//   (iv)  X(tau3) lies in B(w, 41*m0*2^-m) with first coordinate at least
//         z_1 + 138*m0*2^-m.
// k_star is the smallest one; xi = LE(X[k_star, tau3]); u1 is the first xi
// index on w + H(a_{m0}).
//
// Event flags (clause 1 always means a required time/cut was never
// established; the witness is the index deciding the verdict):
//   v1  X(tau0) in w + G(a_0) (clause 2) and X[0, tau0] within m0*2^-m of
//       the half-line (clause 3),
//   v2  X[tau0, tau1] inside w + H[a_0 - 2^-m, a_1] (clause 2) and X(tau1)
//       in w + G(a_1) (clause 3),
//   v3  a good cut exists (clause 2 when the scan came up empty),
//   v4  u1 <= chat * m0 * 2^{beta (n-m)} (clause 2 when too late; witness
//       carries u1),
//   v5  X[tau3, exit_time] avoids the open ball B(z, 110*m0*2^-m)
//       (clause 2, witness the violating index).
struct VEventReport {
    int m = 0, m0 = 0, n = 0;
    double beta = 0, chat = 0;
    i64 box_units = 0;   // box half-width in lattice units, M * 2^{n-m}
    LatticePoint z;
    LatticePoint w;

    ptrdiff_t tau0 = -1, tau1 = -1, tau2 = -1, tau3 = -1;
    ptrdiff_t exit_time = -1;

    std::vector<size_t> good_cuts;  // absolute walk indices
    ptrdiff_t k_star = -1;
    SimplePath xi;
    ptrdiff_t u1 = -1;
    double u1_bound = 0;

    TubeStageFlag v1, v2, v3, v4, v5;
    bool all = false;  // v1..v5 jointly
};

// Evaluates every clause literally.  box_m is the box half-width in units of
// 2^-m.  Errors: scale mismatches, beta/chat out of range, a tube too coarse
// for the cut window (q/2 must be on the lattice), a box not inside the
// 3/4-ball, a prefix that is not simple / does not start at the origin /
// leaves the box / does not end on the +x face, a walk not starting at the
// prefix endpoint, or a walk that never exits the unit ball.
VEventReport detect_v_events(const SimplePath& prefix, const LatticePath& walk,
                             const TubePartition& tube, int box_m, double chat, double beta);

} // namespace lerw
