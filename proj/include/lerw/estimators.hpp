#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lerw/domain.hpp"
#include "lerw/loop_erase.hpp"
#include "lerw/rng.hpp"
#include "lerw/stats.hpp"

namespace lerw {

// One Monte Carlo scalar with its provenance.
struct EstimateRecord {
    double value = 0;
    double std_err = 0;      // sample standard deviation / sqrt(n_samples)
    uint64_t n_samples = 0;
    uint64_t seed = 0;
    std::string params;      // digest of the generating parameters
};

// ---------------------------------------------------------------------------
// Exact solves

// Expected number of visits to y before first exit from the domain, for a
// walk started at x.  Dense LU with one step of iterative refinement up to
// ~3500 lattice points, conjugate gradient on the sparse system beyond.
// Symmetric in (x, y).
double exact_green(const Domain& domain, const LatticePoint& x, const LatticePoint& y);

// Exit-location probability: chance the walk from `start` leaves the domain
// through one of the target points (which must lie outside the domain).
double exact_harmonic_measure(const Domain& domain, const LatticePoint& start,
                              const std::vector<LatticePoint>& target);

// Number of spanning trees of the wired multigraph on the domain (interior
// lattice edges plus one parallel edge per boundary exit), by the matrix-tree
// determinant in exact 128-bit arithmetic.  Feasible to ~30 vertices.
int64_t spanning_tree_count(const Domain& domain);

// Whole-lattice Green's value G(0) and the decay constant c0 of G(x) ~
// c0/|x|, fitted from exact in-ball values at radii 6, 12, 24 via the
// first-order boundary correction G_R(0,0) = G(0) - c0/R.
struct GreenExtrapolation {
    double g0 = 0;
    double c0 = 0;
    std::vector<double> in_ball;  // the three in-ball values used
};
GreenExtrapolation green_extrapolation();

// Law of the loop-erasure of a walk from the origin absorbed outside the
// domain, by exhaustive trajectory enumeration to depth max_steps with exact
// probabilities (numerators over 6^max_steps).  mass_defect is the
// probability of trajectories still alive at the depth cap: a certified
// total-variation bound on the truncation.
struct LerwLaw {
    struct Entry {
        SimplePath path;
        double prob = 0;
    };
    std::vector<Entry> entries;  // sorted by (length, step codes)
    double mass_defect = 0;
    uint64_t states_peak = 0;    // largest per-depth state count encountered
};
LerwLaw exact_lerw_law(const Domain& domain, int max_steps, size_t state_budget = 2000000);

// ---------------------------------------------------------------------------
// Monte Carlo estimators

// Mean visit count of y before exiting the domain, over walks from x.
EstimateRecord mc_green(const Domain& domain, const LatticePoint& x, const LatticePoint& y, uint64_t samples,
                        RandomSource& rng);

// One run per start x recording visit counts for every domain point at once;
// returns records in the order of domain.lattice_points().
std::vector<EstimateRecord> mc_green_all(const Domain& domain, const LatticePoint& x, uint64_t samples,
                                         uint64_t seed, int workers = 1);

// Probability that the walk from x (integer lattice, scale 0) leaves the
// annulus {a <= |v| <= b} through the inner part.  The walk stops as soon as
// |v| <= a or |v| > b; a start already inside the inner region is reported
// with probability 1 and flagged degenerate.  `formula` carries the
// leading-order prediction (|x|^-1 - b^-1)/(a^-1 - b^-1).
struct AnnulusCheck {
    EstimateRecord empirical;
    double formula = 0;
    bool degenerate = false;
};
AnnulusCheck check_annulus_exit(i64 a, i64 b, const LatticePoint& x, uint64_t samples, RandomSource& rng);

// Probability of hitting the origin exactly before leaving the ball of
// radius b, compared with the whole-lattice Green's asymptotics
// (c0/|x| - c0/b)/(G(0) - c0/b) using the fitted constants.
AnnulusCheck check_origin_hit(i64 b, const LatticePoint& x, uint64_t samples, RandomSource& rng);

// First-coordinate projection of the walk: a lazy chain stepping +-1 with
// probability 1/6 each.  Reports the empirical chance of reaching level r
// before 0 from height h, the exact value from a tridiagonal harmonic solve,
// and the measured constant exact * r / (h + 1) for the linear two-sided
// bound.
struct GamblerCheck {
    EstimateRecord empirical;
    double exact = 0;
    double closed_form = 0;   // h / r, for cross-checking the solve
    double measured_constant = 0;
};
GamblerCheck gambler_ruin_check(i64 h, i64 r, uint64_t samples, RandomSource& rng);

// Loop-erasure of a walk from the origin to the first exit of the domain.
SimplePath sample_lerw(int n, const Domain& domain, RandomSource& rng);

// ---------------------------------------------------------------------------
// Length growth and escape

enum class LengthVariant {
    unit_ball,     // length of the loop-erased walk stopped outside the unit ball
    outer_domain,  // first unit-ball exit index of the loop-erasure of a walk
                   // stopped outside the ball of radius 4
};

struct GrowthFit {
    std::vector<int> n_values;
    std::vector<double> mean_len;
    std::vector<double> mean_stderr;
    std::vector<uint64_t> samples_per_n;
    double beta_hat = 0;
    double beta_stderr = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::vector<double> tail_r;                 // ratio thresholds, ascending
    std::vector<std::vector<double>> tail_cov;  // [n index][r index]: P(len/mean in [1/r, r])
    uint64_t seed = 0;
};

// Per-scale mean lengths with a weighted log2 fit of the growth exponent and
// the coverage table P(length/mean in [1/r, r]) for r in tail_r.  The
// schedule pairs each scale with its sample count.
GrowthFit estimate_length_moments(const std::vector<std::pair<int, uint64_t>>& schedule, LengthVariant variant,
                                  uint64_t seed, int workers = 1,
                                  std::vector<double> tail_r = {1.5, 2.0, 3.0, 4.0});

struct EscapeCurve {
    std::vector<int> N_values;
    std::vector<EstimateRecord> es;   // escape probability per N
    double slope = 0;                 // fitted exponent of log2 Es vs log2 N
    double slope_stderr = 0;
    double es1_exact = 0;             // radius-1 value by enumeration (5/6)
};

// Non-intersection probability of a loop-erased walk and an independent walk
// run to radius N, on the integer lattice.  One coupled pair of walks serves
// every N in the list (prefixes of the same trajectories), which makes the
// per-N estimates monotone under the natural coupling.
EscapeCurve estimate_escape(const std::vector<int>& N_list, uint64_t samples, uint64_t seed, int workers = 1);

// Frequency over walks R from x of avoiding every vertex of gamma before
// first leaving the open ball B(x, s_radius).  Exact shortcuts: 0 when x is
// on gamma, 1 when gamma stays outside the ball.
EstimateRecord estimate_hittability(const SimplePath& gamma, const LatticePoint& x, const Dyadic& s_radius,
                                    uint64_t samples, RandomSource& rng);

// ---------------------------------------------------------------------------
// Conditional-law validation

// Compares the continuation law of the loop-erased walk given a fixed simple
// prefix (by filtering full samples) against the loop-erasure of the walk
// conditioned to avoid the prefix (rejection sampling), as a two-sample
// chi-squared homogeneity test over whole continuation paths.
struct PrefixLawCheck {
    Chi2Result chi2;
    uint64_t accepted_filtered = 0;
    uint64_t accepted_conditioned = 0;
    uint64_t proposals_filtered = 0;   // total full samples drawn
    size_t distinct_continuations = 0;
};
PrefixLawCheck check_prefix_law(const Domain& domain, const SimplePath& prefix, uint64_t accepted_target,
                                uint64_t seed);

} // namespace lerw
