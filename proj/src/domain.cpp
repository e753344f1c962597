#include "lerw/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lerw {

namespace {

// Checks that num/2^k compared against coordinates at scale n stays within
// i128 headroom: coordinate * 2^k and num * 2^n both need < 2^120.
void check_ranges(const Dyadic& d, int n) {
    if (n < 0 || n > 28) throw std::invalid_argument("domain: scale out of supported range");
    if (d.k > 34) throw std::invalid_argument("domain: bound exponent too fine for exact comparison");
    long long a = d.num < 0 ? -d.num : d.num;
    if (a > (1LL << 34)) throw std::invalid_argument("domain: bound numerator too large");
}

// value(coord/2^n) OP bound(num/2^k)  <=>  coord << k OP num << n
struct ScalarBound {
    i128 rhs = 0;
    int shift = 0;

    static ScalarBound make(const Dyadic& d, int n) {
        check_ranges(d, n);
        ScalarBound b;
        b.rhs = (i128)d.num << n;
        b.shift = d.k;
        return b;
    }
    bool at_most(i64 v) const { return ((i128)v << shift) <= rhs; }   // v <= bound
    bool less(i64 v) const { return ((i128)v << shift) < rhs; }       // v <  bound
    bool at_least(i64 v) const { return ((i128)v << shift) >= rhs; }  // v >= bound
    bool greater(i64 v) const { return ((i128)v << shift) > rhs; }    // v >  bound

    // Largest integer coordinate with value <= bound (floor(num * 2^(n-k))).
    static i64 floor_at(const Dyadic& d, int n) {
        if (d.k <= n) return d.num << (n - d.k);
        long long q = d.num >> (d.k - n);  // arithmetic shift: floor for negatives
        return q;
    }
};

// squared distance (units 2^-2n) OP (num/2^k)^2  <=>  d2 << 2k OP num^2 << 2n
struct SquareBound {
    i128 rhs = 0;
    int shift = 0;

    static SquareBound make(const Dyadic& d, int n) {
        check_ranges(d, n);
        if (d.num < 0) throw std::invalid_argument("domain: negative radius");
        SquareBound b;
        b.rhs = ((i128)d.num * d.num) << (2 * n);
        b.shift = 2 * d.k;
        return b;
    }
    bool less(i128 d2) const { return (d2 << shift) < rhs; }
    bool at_most(i128 d2) const { return (d2 << shift) <= rhs; }
    bool at_least(i128 d2) const { return (d2 << shift) >= rhs; }
};

} // namespace

struct DomainImpl {
    int n = 0;
    virtual ~DomainImpl() = default;
    virtual bool contains_rel(i64 x, i64 y, i64 z) const = 0;
    virtual Box box() const = 0;
    virtual const Domain::BallView* ball_view() const { return nullptr; }
    // Signed Euclidean distance from the continuum point (x,y,z)/2^n to the
    // shape boundary: positive inside, non-positive outside.
    virtual double clearance_rel(i64 x, i64 y, i64 z) const = 0;
};

namespace {

struct BallImpl : DomainImpl {
    Domain::BallView v;
    Dyadic radius;

    bool contains_rel(i64 x, i64 y, i64 z) const override {
        i128 d2 = norm2(x - v.cx, y - v.cy, z - v.cz);
        i128 lhs = d2 << v.shift;
        return v.closed ? lhs <= v.rhs : lhs < v.rhs;
    }
    Box box() const override {
        Box b;
        i64 r = ScalarBound::floor_at(radius, n) + 1;
        b.lo[0] = v.cx - r; b.hi[0] = v.cx + r;
        b.lo[1] = v.cy - r; b.hi[1] = v.cy + r;
        b.lo[2] = v.cz - r; b.hi[2] = v.cz + r;
        return b;
    }
    const Domain::BallView* ball_view() const override { return &v; }
    double clearance_rel(i64 x, i64 y, i64 z) const override {
        double d = std::sqrt((double)norm2(x - v.cx, y - v.cy, z - v.cz)) / std::ldexp(1.0, n);
        return radius.value() - d;
    }
};

struct CubeImpl : DomainImpl {
    i64 cx, cy, cz;
    ScalarBound half;
    Dyadic half_side;

    bool contains_rel(i64 x, i64 y, i64 z) const override {
        i64 dx = std::abs(x - cx), dy = std::abs(y - cy), dz = std::abs(z - cz);
        return half.at_most(dx) && half.at_most(dy) && half.at_most(dz);
    }
    Box box() const override {
        Box b;
        i64 h = ScalarBound::floor_at(half_side, n);
        b.lo[0] = cx - h; b.hi[0] = cx + h;
        b.lo[1] = cy - h; b.hi[1] = cy + h;
        b.lo[2] = cz - h; b.hi[2] = cz + h;
        return b;
    }
    double clearance_rel(i64 x, i64 y, i64 z) const override {
        double s = std::ldexp(1.0, -n);
        double m = half_side.value() - std::abs(x - cx) * s;
        m = std::min(m, half_side.value() - std::abs(y - cy) * s);
        m = std::min(m, half_side.value() - std::abs(z - cz) * s);
        return m;
    }
};

struct AnnulusImpl : DomainImpl {
    i64 cx, cy, cz;
    SquareBound inner, outer;
    Dyadic a_inner, b_outer;

    bool contains_rel(i64 x, i64 y, i64 z) const override {
        i128 d2 = norm2(x - cx, y - cy, z - cz);
        return inner.at_least(d2) && outer.at_most(d2);
    }
    Box box() const override {
        Box b;
        i64 r = ScalarBound::floor_at(b_outer, n) + 1;
        b.lo[0] = cx - r; b.hi[0] = cx + r;
        b.lo[1] = cy - r; b.hi[1] = cy + r;
        b.lo[2] = cz - r; b.hi[2] = cz + r;
        return b;
    }
    double clearance_rel(i64 x, i64 y, i64 z) const override {
        double d = std::sqrt((double)norm2(x - cx, y - cy, z - cz)) / std::ldexp(1.0, n);
        return std::min(d - a_inner.value(), b_outer.value() - d);
    }
};

struct SlabImpl : DomainImpl {
    int axis;
    ScalarBound lo, hi, tw;
    bool lo_open, hi_open;
    Dyadic lo_d, hi_d, tw_d;

    bool contains_rel(i64 x, i64 y, i64 z) const override {
        i64 c[3] = {x, y, z};
        i64 v = c[axis];
        if (lo_open ? !lo.greater(v) : !lo.at_least(v)) return false;  // lo < v  (or <=)
        if (hi_open ? !hi.less(v) : !hi.at_most(v)) return false;     // v < hi  (or <=)
        for (int a = 0; a < 3; ++a) {
            if (a == axis) continue;
            if (!tw.at_most(std::abs(c[a]))) return false;
        }
        return true;
    }
    Box box() const override {
        Box b;
        b.lo[axis] = ScalarBound::floor_at(lo_d, n);
        b.hi[axis] = ScalarBound::floor_at(hi_d, n);
        i64 t = ScalarBound::floor_at(tw_d, n);
        for (int a = 0; a < 3; ++a) {
            if (a == axis) continue;
            b.lo[a] = -t;
            b.hi[a] = t;
        }
        return b;
    }
    double clearance_rel(i64 x, i64 y, i64 z) const override {
        double s = std::ldexp(1.0, -n);
        i64 c[3] = {x, y, z};
        double v = c[axis] * s;
        double m = std::min(v - lo_d.value(), hi_d.value() - v);
        for (int a = 0; a < 3; ++a) {
            if (a == axis) continue;
            m = std::min(m, tw_d.value() - std::abs(c[a]) * s);
        }
        return m;
    }
};

struct HalfspaceImpl : DomainImpl {
    int axis;
    ScalarBound bound;
    bool upper, closed;
    Dyadic bound_d;

    bool contains_rel(i64 x, i64 y, i64 z) const override {
        i64 c[3] = {x, y, z};
        i64 v = c[axis];
        if (upper) return closed ? bound.at_least(v) : bound.greater(v);
        return closed ? bound.at_most(v) : bound.less(v);
    }
    Box box() const override {
        Box b;
        if (upper) b.lo[axis] = ScalarBound::floor_at(bound_d, n);
        else b.hi[axis] = ScalarBound::floor_at(bound_d, n) + 1;
        return b;
    }
    double clearance_rel(i64 x, i64 y, i64 z) const override {
        i64 c[3] = {x, y, z};
        double v = c[axis] * std::ldexp(1.0, -n);
        return upper ? v - bound_d.value() : bound_d.value() - v;
    }
};

struct IntersectionImpl : DomainImpl {
    std::vector<Domain> parts;

    bool contains_rel(i64 x, i64 y, i64 z) const override {
        for (const auto& p : parts)
            if (!p.contains_xyz(x, y, z)) return false;
        return true;
    }
    Box box() const override {
        Box b;
        for (const auto& p : parts) {
            Box c = p.bounding_box();
            for (int a = 0; a < 3; ++a) {
                b.lo[a] = std::max(b.lo[a], c.lo[a]);
                b.hi[a] = std::min(b.hi[a], c.hi[a]);
            }
        }
        return b;
    }
    double clearance_rel(i64 x, i64 y, i64 z) const override {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& p : parts) m = std::min(m, p.boundary_clearance_xyz(x, y, z));
        return m;
    }
};

struct TranslateImpl : DomainImpl {
    Domain base;
    i64 ox, oy, oz;

    bool contains_rel(i64 x, i64 y, i64 z) const override {
        return base.contains_xyz(x - ox, y - oy, z - oz);
    }
    Box box() const override {
        Box b = base.bounding_box();
        for (int a = 0; a < 3; ++a) {
            i64 o = a == 0 ? ox : (a == 1 ? oy : oz);
            if (b.lo[a] > -kBoxInf) b.lo[a] += o;
            if (b.hi[a] < kBoxInf) b.hi[a] += o;
        }
        return b;
    }
    double clearance_rel(i64 x, i64 y, i64 z) const override {
        return base.boundary_clearance_xyz(x - ox, y - oy, z - oz);
    }
};

} // namespace

// Factory helpers live outside the anonymous namespace so Domain can friend them.

Domain Domain::ball(const LatticePoint& center, const Dyadic& radius) {
    auto impl = std::make_shared<BallImpl>();
    impl->n = center.n;
    check_ranges(radius, center.n);
    SquareBound sb = SquareBound::make(radius, center.n);
    impl->v = BallView{center.x, center.y, center.z, sb.rhs, sb.shift, false};
    impl->radius = radius;
    return Domain(impl);
}

Domain Domain::closed_ball(const LatticePoint& center, const Dyadic& radius) {
    auto impl = std::make_shared<BallImpl>();
    impl->n = center.n;
    SquareBound sb = SquareBound::make(radius, center.n);
    impl->v = BallView{center.x, center.y, center.z, sb.rhs, sb.shift, true};
    impl->radius = radius;
    return Domain(impl);
}

Domain Domain::cube(const LatticePoint& center, const Dyadic& half_side) {
    if (half_side.num < 0) throw std::invalid_argument("domain: negative cube half-side");
    auto impl = std::make_shared<CubeImpl>();
    impl->n = center.n;
    impl->cx = center.x; impl->cy = center.y; impl->cz = center.z;
    impl->half = ScalarBound::make(half_side, center.n);
    impl->half_side = half_side;
    return Domain(impl);
}

Domain Domain::annulus(const LatticePoint& center, const Dyadic& a, const Dyadic& b) {
    if (b < a) throw std::invalid_argument("domain: annulus needs a <= b");
    auto impl = std::make_shared<AnnulusImpl>();
    impl->n = center.n;
    impl->cx = center.x; impl->cy = center.y; impl->cz = center.z;
    impl->inner = SquareBound::make(a, center.n);
    impl->outer = SquareBound::make(b, center.n);
    impl->a_inner = a;
    impl->b_outer = b;
    return Domain(impl);
}

Domain Domain::slab(int scale, int axis, const Dyadic& lo, bool lo_open, const Dyadic& hi, bool hi_open,
                    const Dyadic& transverse) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("domain: bad axis");
    if (hi < lo) throw std::invalid_argument("domain: slab needs lo <= hi");
    auto impl = std::make_shared<SlabImpl>();
    impl->n = scale;
    impl->axis = axis;
    impl->lo = ScalarBound::make(lo, scale);
    impl->hi = ScalarBound::make(hi, scale);
    impl->tw = ScalarBound::make(transverse, scale);
    impl->lo_open = lo_open;
    impl->hi_open = hi_open;
    impl->lo_d = lo; impl->hi_d = hi; impl->tw_d = transverse;
    return Domain(impl);
}

Domain Domain::halfspace(int scale, int axis, const Dyadic& bound, bool upper, bool closed) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("domain: bad axis");
    auto impl = std::make_shared<HalfspaceImpl>();
    impl->n = scale;
    impl->axis = axis;
    impl->bound = ScalarBound::make(bound, scale);
    impl->upper = upper;
    impl->closed = closed;
    impl->bound_d = bound;
    return Domain(impl);
}

Domain Domain::intersection(std::vector<Domain> parts) {
    if (parts.empty()) throw std::invalid_argument("domain: empty intersection");
    int n = parts[0].scale();
    for (const auto& p : parts)
        if (p.scale() != n) throw std::invalid_argument("domain: intersection scale mismatch");
    auto impl = std::make_shared<IntersectionImpl>();
    impl->n = n;
    impl->parts = std::move(parts);
    return Domain(impl);
}

Domain Domain::translate(const Domain& base, const LatticePoint& offset) {
    if (offset.n != base.scale()) throw std::invalid_argument("domain: translate scale mismatch");
    auto impl = std::make_shared<TranslateImpl>();
    impl->n = base.scale();
    impl->base = base;
    impl->ox = offset.x; impl->oy = offset.y; impl->oz = offset.z;
    return Domain(impl);
}

int Domain::scale() const {
    if (!impl_) throw std::logic_error("domain: empty");
    return impl_->n;
}

bool Domain::contains(const LatticePoint& p) const {
    if (!impl_) throw std::logic_error("domain: empty");
    if (p.n != impl_->n)
        throw std::invalid_argument("domain: point scale " + std::to_string(p.n) + " != domain scale " +
                                    std::to_string(impl_->n));
    return impl_->contains_rel(p.x, p.y, p.z);
}

bool Domain::contains_xyz(i64 x, i64 y, i64 z) const {
    return impl_->contains_rel(x, y, z);
}

double Domain::boundary_clearance(const LatticePoint& p) const {
    if (!impl_) throw std::logic_error("domain: empty");
    if (p.n != impl_->n)
        throw std::invalid_argument("domain: point scale " + std::to_string(p.n) + " != domain scale " +
                                    std::to_string(impl_->n));
    return impl_->clearance_rel(p.x, p.y, p.z);
}

double Domain::boundary_clearance_xyz(i64 x, i64 y, i64 z) const {
    return impl_->clearance_rel(x, y, z);
}

Box Domain::bounding_box() const {
    if (!impl_) throw std::logic_error("domain: empty");
    return impl_->box();
}

const Domain::BallView* Domain::as_ball() const {
    return impl_ ? impl_->ball_view() : nullptr;
}

std::vector<LatticePoint> Domain::lattice_points(size_t max_points) const {
    Box b = bounding_box();
    if (!b.bounded()) throw std::invalid_argument("domain: cannot enumerate an unbounded domain");
    i128 vol = 1;
    for (int a = 0; a < 3; ++a) vol *= (i128)(b.hi[a] - b.lo[a] + 1);
    if (vol > (i128)max_points * 8)
        throw std::invalid_argument("domain: too large to enumerate");
    std::vector<LatticePoint> out;
    for (i64 x = b.lo[0]; x <= b.hi[0]; ++x)
        for (i64 y = b.lo[1]; y <= b.hi[1]; ++y)
            for (i64 z = b.lo[2]; z <= b.hi[2]; ++z)
                if (impl_->contains_rel(x, y, z)) {
                    out.push_back(LatticePoint{x, y, z, impl_->n});
                    if (out.size() > max_points) throw std::invalid_argument("domain: too large to enumerate");
                }
    return out;
}

size_t Domain::count_lattice_points(size_t max_points) const {
    Box b = bounding_box();
    if (!b.bounded()) throw std::invalid_argument("domain: cannot enumerate an unbounded domain");
    size_t count = 0;
    for (i64 x = b.lo[0]; x <= b.hi[0]; ++x)
        for (i64 y = b.lo[1]; y <= b.hi[1]; ++y)
            for (i64 z = b.lo[2]; z <= b.hi[2]; ++z)
                if (impl_->contains_rel(x, y, z)) {
                    if (++count > max_points) throw std::invalid_argument("domain: too large to enumerate");
                }
    return count;
}

} // namespace lerw
