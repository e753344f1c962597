#pragma once

#include <array>
#include <limits>
#include <memory>
#include <vector>

#include "lerw/dyadic.hpp"
#include "lerw/point.hpp"

namespace lerw {

// Conservative integer bounding box at the domain scale, inclusive.
// Unbounded sides use the +-kBoxInf sentinels.
inline constexpr i64 kBoxInf = (i64)1 << 60;

struct Box {
    i64 lo[3] = {-kBoxInf, -kBoxInf, -kBoxInf};
    i64 hi[3] = {kBoxInf, kBoxInf, kBoxInf};

    bool bounded() const {
        for (int a = 0; a < 3; ++a)
            if (lo[a] <= -kBoxInf || hi[a] >= kBoxInf) return false;
        return true;
    }
};

struct DomainImpl;

// Subset of the rescaled lattice 2^-n Z^3, immutable after construction.
// Membership is exact: every comparison against a dyadic bound is done by
// integer cross-multiplication, never through floating point.
class Domain {
public:
    Domain() = default;

    static Domain ball(const LatticePoint& center, const Dyadic& radius);         // |p - c| <  r
    static Domain closed_ball(const LatticePoint& center, const Dyadic& radius);  // |p - c| <= r
    static Domain cube(const LatticePoint& center, const Dyadic& half_side);      // ||p - c||_inf <= h
    static Domain annulus(const LatticePoint& center, const Dyadic& a, const Dyadic& b);  // a <= |p-c| <= b
    // Axis-aligned slab: lo (<|<=) p[axis] (<|<=) hi with |p[other]| <= transverse.
    static Domain slab(int scale, int axis, const Dyadic& lo, bool lo_open, const Dyadic& hi, bool hi_open,
                       const Dyadic& transverse);
    static Domain halfspace(int scale, int axis, const Dyadic& bound, bool upper, bool closed);
    static Domain intersection(std::vector<Domain> parts);
    static Domain translate(const Domain& base, const LatticePoint& offset);

    bool valid() const { return impl_ != nullptr; }
    int scale() const;

    // Throws std::invalid_argument when p.n differs from the domain scale.
    bool contains(const LatticePoint& p) const;
    // Fast path used by sampling loops; coordinates are at the domain scale.
    bool contains_xyz(i64 x, i64 y, i64 z) const;

    Box bounding_box() const;

    // Signed Euclidean distance from p (as a continuum point) to the domain
    // boundary: positive inside, non-positive outside.  Floating point; meant
    // for threshold tests like dist(p, boundary) >= 4 sqrt(r).
    double boundary_clearance(const LatticePoint& p) const;
    double boundary_clearance_xyz(i64 x, i64 y, i64 z) const;

    // Enumerates all lattice points of a bounded domain, ordered by (x, y, z).
    // Throws when the bounding box is unbounded or larger than max_points.
    std::vector<LatticePoint> lattice_points(size_t max_points = 50000000) const;
    size_t count_lattice_points(size_t max_points = 50000000) const;

    // Non-null when the domain is a Euclidean ball; used by hot sampling loops.
    struct BallView {
        i64 cx, cy, cz;
        i128 rhs;   // num^2 << 2n
        int shift;  // 2k, applied to the squared distance
        bool closed;
    };
    const BallView* as_ball() const;

private:
    explicit Domain(std::shared_ptr<const DomainImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const DomainImpl> impl_;
};

} // namespace lerw
