#pragma once

#include <cstdint>
#include <vector>

#include "lerw/loop_erase.hpp"
#include "lerw/path.hpp"
#include "lerw/tube.hpp"

namespace lerw {

// Verdict for one clause-checked event, with enough of a witness to re-verify
// it independently: the id of the first failing clause (0 when the event
// holds) and the step index that decided it (a hit time, a violation time, or
// a measured length, depending on the event -- documented per field below).
struct TubeStageFlag {
    bool ok = false;
    int clause = 0;
    ptrdiff_t witness = -1;
};

// Everything one walk does against one tube partition.  The walk is expected
// to start at the origin and run at least to its first exit of the ball of
// radius 40*m0*2^-m; gamma denotes the loop-erasure of the walk up to that
// exit index.
//
// Event families, all over cube/plane indices of the partition:
//   advance[i]   (i = 0..2m0)  the walk crosses cube i forward: it first
//                meets H(a_{i+1}) in the centered face G(a_{i+1}), stays in
//                the stage region until then (cube Q_0 for i = 0, the slab
//                H(a_i - q, a_{i+1}] afterwards), and between its first visit
//                to H(a_{i+1} - q) and the crossing never backtracks past
//                H(a_{i+1} - 2q).  Clause ids: 1 = required plane never met
//                (or met out of order), 2 = crossing point outside the face,
//                3 = stage region left beforehand, 4 = backtracking.
//   cut[i-1]     (i = 1..2m0)  a nice cut time exists in cube i; witness is
//                the first one.
//   short_seg[i] (i = 0..2m0)  the i-th segment loop-erasure is short:
//                len <= cstar * 2^{beta (n-m)}; witness carries the length.
//   f/g/j[i]     cumulative conjunctions of the three families up to i
//                (g[0] and j-entries before their family starts are vacuous).
//   u            exit location: the walk leaves the 40*m0*2^-m ball with
//                x-coordinate >= 8*m0*2^-m (clause 1) and, after first
//                meeting H(a_{2m0+1}), never re-enters the open ball of
//                radius 2^-m (3 m0 - 1) around the origin (clause 2).
//   l_ok         every thin cuboid around w_l = (a_l, 0, 0), l = 1..m0,
//                holds at most 2^{beta (n-m)} vertices of gamma
//                (cuboid_count has the exact counts).
//   all          conjunction of f, g, j at 2m0 together with u and l_ok.
//
// The segment loop-erasures are kept: xi0 = LE(S[0, t(a_1)]) and
// lambda[i-1] = LE(S[t(a_i), t(a_{i+1})]); seg_len lists their lengths in
// the same order.  When gamma meets the mid plane piece H(a_{m0}),
// crossing_time is the first such index, crossing_dist = |gamma(k)| rescaled,
// and ratio = crossing_dist / (2^{-beta n} k)^{1/beta}, computed with the
// same floating-point expression the curve modulus statistic uses so that
// the modulus over [0, k] dominates it exactly.
struct TubeEventReport {
    int m = 0, m0 = 0, n = 0;
    double beta = 0, cstar = 0;
    double len_bound = 0;

    std::vector<TubeStageFlag> advance;
    std::vector<TubeStageFlag> cut;
    std::vector<TubeStageFlag> short_seg;
    std::vector<char> f, g, j;

    std::vector<ptrdiff_t> hit_time;  // hit_time[i] = first index on H(a_i); [0] unused (-1)
    ptrdiff_t exit_time = -1;

    SimplePath xi0;
    std::vector<SimplePath> lambda;
    std::vector<size_t> seg_len;

    std::vector<uint64_t> cuboid_count;
    bool l_ok = false;
    TubeStageFlag u;
    bool all = false;

    ptrdiff_t crossing_time = -1;
    double crossing_dist = 0;
    double ratio = 0;

    // Largest i with f[i] && g[i], or -1.
    int max_fg_stage() const;
};

// Evaluates every event literally on the supplied walk.  Errors: scale
// mismatch, walk not starting at the origin, beta outside (1, 5/3], cstar
// <= 0, tube too coarse for the cut windows (q/2 must be on the lattice),
// or the walk never reaching the exit radius.
TubeEventReport detect_tube_events(const LatticePath& walk, const TubePartition& tube, double cstar,
                                   double beta);

// One stage of the deterministic length bookkeeping at index i: the full
// prefix loop-erasure xi_i = LE(S[0, t(a_{i+1})]) is no longer than the
// stitched segments xi'_i = xi0 + lambda_1 + ... + lambda_i plus the number
// of xi_i vertices inside the slabs H(a_l - q, a_l + q], l = 1..i.
struct StageDecomposition {
    int i = 0;
    size_t xi_len = 0;
    size_t xi_prime_len = 0;
    std::vector<uint64_t> overlap;  // per-slab vertex counts of xi_i
    bool ok = false;
};

struct LengthDecomposition {
    bool ok = false;                        // every checked stage passed
    std::vector<StageDecomposition> stages;  // one entry per flagged stage
};

// Checks the inequality above, exactly, at every stage i the report flags
// with f[i] && g[i] (stage 0 degenerates to len(xi0) <= len(xi0)).  Errors
// when the report establishes no such stage, or walk/tube do not match the
// report.
LengthDecomposition verify_length_decomposition(const LatticePath& walk, const TubePartition& tube,
                                                const TubeEventReport& report);

// One surviving sample of a batch run, kept only when the walk completed the
// first two advance stages so the cut/decomposition machinery has something
// to examine.  Fields mirror TubeEventReport; modulus is the curve modulus
// statistic over [0, crossing_time] when `all` holds (else 0).
struct TubeSampleDetail {
    uint64_t sample = 0;
    int f_stages = 0;    // leading advance events that hold
    int fg_stages = 0;   // leading stages with both advance and cut
    bool full = false;   // every advance stage passed
    bool g_all = false, j_all = false, l_ok = false, u_ok = false, am = false;
    bool decomposition_ok = true;
    std::vector<size_t> seg_len;
    ptrdiff_t crossing_time = -1;
    double ratio = 0;
    double modulus = 0;
    bool modulus_ok = true;  // modulus >= ratio (checked when am holds)
};

// Aggregate of a batch: stagewise survival counts plus the rare-event
// details.  f_count[i] counts samples whose first i+1 advance events all
// hold; fg_count[i] additionally requires the cut events through stage i.
struct TubeBatchResult {
    int m = 0, m0 = 0, n = 0;
    double beta = 0, cstar = 0;
    uint64_t samples = 0;
    std::vector<uint64_t> f_count;
    std::vector<uint64_t> fg_count;
    uint64_t full_f = 0;      // all advance stages
    uint64_t full_fg = 0;     // ... plus all cuts
    uint64_t full_fgj = 0;    // ... plus all short-segment bounds
    uint64_t u_count = 0;     // exit event among full_f samples
    uint64_t l_count = 0;     // occupation event among full_f samples
    uint64_t am_count = 0;    // full conjunction
    uint64_t capped = 0;      // samples aborted by the hard step cap
    uint64_t decomposition_checked = 0;
    uint64_t decomposition_violations = 0;
    uint64_t modulus_checked = 0;
    uint64_t modulus_violations = 0;
    std::vector<TubeSampleDetail> details;    // samples with f_stages >= 2, in sample order
    std::vector<double> crossing_times;       // over samples with the full conjunction
    std::vector<double> ratios;
};

// Samples `samples` walks from the origin (stream id = sample index, so the
// result is independent of `workers`), aborting each walk at the first
// decided advance failure and carrying survivors through the exit radius.
// Equivalent to running detect_tube_events on every full walk, evaluated
// lazily.  Errors: tube preconditions (needs n >= m + m0 + 2), beta/cstar
// range, or an exit radius too large for the loop-erasure coordinate packing.
TubeBatchResult run_tube_batch(int m, int m0, int n, double beta, double cstar, uint64_t samples,
                               uint64_t seed, int workers);

} // namespace lerw
