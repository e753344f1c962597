#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_set>
#include <vector>

#include "lerw/domain.hpp"
#include "lerw/dyadic.hpp"
#include "lerw/path.hpp"
#include "lerw/point.hpp"
#include "lerw/rng.hpp"
#include "lerw/tube.hpp"

namespace lerw {

inline constexpr uint64_t kDefaultStepCap = 1000000000ull;

// Stopping rule evaluated at every vertex, including the start.  first_of
// reports which child fired so callers can distinguish exits from caps.
class StopRule {
public:
    static StopRule exit_domain(Domain d);
    static StopRule enter_domain(Domain d);
    static StopRule hit_set(std::vector<LatticePoint> pts);
    // Fires on the plane piece H(a) of the tube: x-coordinate equals a
    // exactly, transverse coordinates within 2^-m.  a must be snapped.
    static StopRule hit_plane(const TubePartition& tube, const Dyadic& a);
    static StopRule step_cap(uint64_t cap);
    static StopRule first_of(std::vector<StopRule> rules);

    // Index of the fired rule (0 for a leaf, child index for first_of), or -1.
    int check(const LatticePoint& p, uint64_t steps_taken) const;

    const Domain* domain() const;  // non-null for exit_domain leaves
    bool has_step_cap() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

struct WalkResult {
    LatticePath path;
    int fired = -1;          // which rule stopped the walk
    bool capped = false;     // hard step_cap argument was hit instead
};

// Simple random walk from `start` until the rule fires.  One RNG draw per
// step in the fixed direction order.  `hard_cap` bounds the loop regardless
// of the rule; hitting it sets `capped`.
WalkResult sample_walk(const LatticePoint& start, const StopRule& rule, RandomSource& rng,
                       uint64_t hard_cap = kDefaultStepCap);

// First index at or after `from` where the path meets the transverse-bounded
// plane piece H(a) of the tube (x-coordinate equals a, |y|, |z| <= 2^-m).
// Hitting is exact coordinate equality, so a must be a multiple of 2^-n.
std::optional<size_t> plane_hit_time(const LatticePath& path, const TubePartition& tube, const Dyadic& a,
                                     size_t from = 0);

struct ConditionedWalk {
    LatticePath path;
    uint64_t attempts = 0;   // total trials including the accepted one
    bool ok = false;
};

// Rejection sampler for the walk conditioned to avoid `avoid` from time 1 on:
// trials are discarded at the first forbidden vertex and restarted.  Fails
// (ok = false) after max_attempts rejected trials.
ConditionedWalk sample_conditioned_walk(const LatticePoint& start, const StopRule& terminal,
                                        const std::vector<LatticePoint>& avoid, RandomSource& rng,
                                        uint64_t max_attempts = 1000000, uint64_t hard_cap = kDefaultStepCap);

} // namespace lerw
