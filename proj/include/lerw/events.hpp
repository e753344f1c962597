#pragma once

#include <cstdint>
#include <vector>

#include "lerw/curve.hpp"
#include "lerw/dyadic.hpp"
#include "lerw/loop_erase.hpp"
#include "lerw/rng.hpp"

namespace lerw {

// A path has an (s1, s2) quasi-loop at a lattice point x when it visits the
// open ball B(x, s1) at two times k1 <= k2 without staying inside the open
// ball B(x, s2) in between.  Radii are in rescaled units at the path scale;
// all membership tests are exact integer comparisons.

// Every quasi-loop center, lexicographically sorted.  Enumerates candidate
// centers near the path, so it is meant for short paths and cross-checks.
std::vector<LatticePoint> detect_quasi_loops(const SimplePath& path, const Dyadic& s1, const Dyadic& s2);

// Existence test, exact but built for long paths: candidate visit pairs come
// from a spatial grid, are screened by range bounding boxes, and only
// marginal pairs fall back to scanning the excursion.
bool has_quasi_loop(const SimplePath& path, const Dyadic& s1, const Dyadic& s2);

enum class Verdict { pass, fail, undecided };

// Conjunction of three per-path regularity events at spacing parameters
// (delta, eps) and hittability radius r:
//  - the displacement increments tau number at most delta^-3;
//  - every lattice point within r of the path is hard to miss: the chance a
//    walk from it leaves B(x, sqrt r) without touching the path is at most
//    delta^5 (Monte Carlo, three-valued at a 4-standard-error band);
//  - around each increment mark, the rest of the path keeps distance r^(1/3).
struct EventReport {
    TauSequence taus;
    Verdict increments = Verdict::undecided;     // N <= delta^-3
    Verdict hittability = Verdict::undecided;
    Verdict isolation = Verdict::undecided;
    Verdict overall = Verdict::undecided;
    uint64_t points_checked = 0;             // lattice points tested for hittability
    double worst_phat = 0;                   // largest escape estimate seen
    double worst_se = 0;
    std::vector<size_t> isolation_violations;  // increment indices that failed
};

EventReport check_F_events(const SimplePath& path, double beta, double delta, double eps, double r,
                           uint64_t mc_samples, RandomSource& rng);

// Fast-displacement certificate: some pair of path times at most
// 2 delta 2^(beta n) apart is at spatial distance at least
// delta^(1/beta - eps) / 2.  Thresholds round conservatively (the distance
// bound rounds up), so an `occurred` verdict is exact.
struct KEventReport {
    bool occurred = false;
    size_t s = 0;
    size_t t = 0;
    size_t window = 0;        // max index gap examined
    i64 threshold_sq = 0;     // squared distance bound in lattice units
};

KEventReport check_K_event(const SimplePath& path, double beta, double delta, double eps);

} // namespace lerw
