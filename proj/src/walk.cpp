#include "lerw/walk.hpp"

#include <stdexcept>

namespace lerw {

LatticePath path_from_vertices(std::span<const LatticePoint> vs) {
    if (vs.empty()) throw std::invalid_argument("path: no vertices");
    LatticePath p(vs[0]);
    for (size_t i = 1; i < vs.size(); ++i) {
        if (vs[i].n != vs[0].n) throw std::invalid_argument("path: mixed scales");
        int dir = -1;
        for (int d = 0; d < 6; ++d)
            if (step(vs[i - 1], d) == vs[i]) { dir = d; break; }
        if (dir < 0) throw std::invalid_argument("path: vertices " + std::to_string(i - 1) + "," +
                                                 std::to_string(i) + " are not lattice neighbours");
        p.push(dir);
    }
    return p;
}

LatticePath concat(const LatticePath& a, const LatticePath& b) {
    if (a.empty_path() || b.empty_path()) throw std::invalid_argument("concat: empty path");
    if (a.n != b.n) throw std::invalid_argument("concat: scale mismatch");
    if (!(a.last() == b.start())) throw std::invalid_argument("concat: endpoint of a differs from start of b");
    LatticePath out = a;
    for (uint8_t s : b.steps) out.push(s);
    return out;
}

struct StopRule::Impl {
    enum Kind { kExitDomain, kEnterDomain, kHitSet, kHitPlane, kStepCap, kFirstOf } kind;
    Domain dom;
    std::unordered_set<LatticePoint, PointHash> set;
    i64 plane_units = 0;  // plane x-coordinate in lattice units
    i64 tw_units = 0;     // transverse half-width 2^-m in lattice units
    uint64_t cap = 0;
    std::vector<StopRule> children;
};

StopRule StopRule::exit_domain(Domain d) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::kExitDomain;
    impl->dom = std::move(d);
    StopRule r;
    r.impl_ = impl;
    return r;
}

StopRule StopRule::enter_domain(Domain d) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::kEnterDomain;
    impl->dom = std::move(d);
    StopRule r;
    r.impl_ = impl;
    return r;
}

StopRule StopRule::hit_set(std::vector<LatticePoint> pts) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::kHitSet;
    for (const auto& p : pts) {
        if (p.n != pts[0].n) throw std::invalid_argument("stop rule: hit set mixes scales");
        impl->set.insert(p);
    }
    StopRule r;
    r.impl_ = impl;
    return r;
}

StopRule StopRule::hit_plane(const TubePartition& tube, const Dyadic& a) {
    if (!a.representable_at(tube.n))
        throw std::invalid_argument("stop rule: plane coordinate " + a.str() + " is not snapped to 2^-" +
                                    std::to_string(tube.n));
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::kHitPlane;
    impl->plane_units = a.scaled_num(tube.n);
    impl->tw_units = (i64)1 << (tube.n - tube.m);
    StopRule r;
    r.impl_ = impl;
    return r;
}

StopRule StopRule::step_cap(uint64_t cap) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::kStepCap;
    impl->cap = cap;
    StopRule r;
    r.impl_ = impl;
    return r;
}

StopRule StopRule::first_of(std::vector<StopRule> rules) {
    if (rules.empty()) throw std::invalid_argument("stop rule: empty first_of");
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::kFirstOf;
    impl->children = std::move(rules);
    StopRule r;
    r.impl_ = impl;
    return r;
}

int StopRule::check(const LatticePoint& p, uint64_t steps_taken) const {
    const Impl& im = *impl_;
    switch (im.kind) {
        case Impl::kExitDomain: return im.dom.contains(p) ? -1 : 0;
        case Impl::kEnterDomain: return im.dom.contains(p) ? 0 : -1;
        case Impl::kHitSet: return im.set.count(p) ? 0 : -1;
        case Impl::kHitPlane:
            return p.x == im.plane_units && p.y >= -im.tw_units && p.y <= im.tw_units && p.z >= -im.tw_units &&
                           p.z <= im.tw_units
                       ? 0
                       : -1;
        case Impl::kStepCap: return steps_taken >= im.cap ? 0 : -1;
        case Impl::kFirstOf:
            for (size_t i = 0; i < im.children.size(); ++i)
                if (im.children[i].check(p, steps_taken) >= 0) return (int)i;
            return -1;
    }
    return -1;
}

const Domain* StopRule::domain() const {
    return impl_ && impl_->kind == Impl::kExitDomain ? &impl_->dom : nullptr;
}

bool StopRule::has_step_cap() const {
    if (!impl_) return false;
    if (impl_->kind == Impl::kStepCap) return true;
    if (impl_->kind == Impl::kFirstOf)
        for (const auto& c : impl_->children)
            if (c.has_step_cap()) return true;
    return false;
}

WalkResult sample_walk(const LatticePoint& start, const StopRule& rule, RandomSource& rng, uint64_t hard_cap) {
    WalkResult res;
    res.path = LatticePath(start);
    LatticePoint p = start;

    // Fast path: plain exit of a Euclidean ball, the dominant workload.
    const Domain* dom = rule.domain();
    const Domain::BallView* ball = dom ? dom->as_ball() : nullptr;
    if (ball != nullptr) {
        auto inside = [&](i64 x, i64 y, i64 z) {
            i128 d2 = norm2(x - ball->cx, y - ball->cy, z - ball->cz) << ball->shift;
            return ball->closed ? d2 <= ball->rhs : d2 < ball->rhs;
        };
        i64 x = p.x, y = p.y, z = p.z;
        if (!inside(x, y, z)) { res.fired = 0; return res; }
        for (uint64_t k = 0; k < hard_cap; ++k) {
            int d = rng.next_direction();
            x += kDirections[d][0];
            y += kDirections[d][1];
            z += kDirections[d][2];
            res.path.push(d);
            if (!inside(x, y, z)) { res.fired = 0; return res; }
        }
        res.capped = true;
        return res;
    }

    int fired = rule.check(p, 0);
    if (fired >= 0) { res.fired = fired; return res; }
    for (uint64_t k = 0; k < hard_cap; ++k) {
        int d = rng.next_direction();
        p = step(p, d);
        res.path.push(d);
        fired = rule.check(p, k + 1);
        if (fired >= 0) { res.fired = fired; return res; }
    }
    res.capped = true;
    return res;
}

std::optional<size_t> plane_hit_time(const LatticePath& path, const TubePartition& tube, const Dyadic& a,
                                     size_t from) {
    if (path.n != tube.n) throw std::invalid_argument("plane_hit_time: path scale differs from tube scale");
    if (!a.representable_at(path.n))
        throw std::invalid_argument("plane_hit_time: coordinate " + a.str() + " not snapped to 2^-" +
                                    std::to_string(path.n));
    const i64 c = a.scaled_num(path.n);
    const i64 half = (i64)1 << (path.n - tube.m);
    for (size_t i = from; i < path.num_vertices(); ++i) {
        const auto& v = path.verts[i];
        if (v[0] == c && v[1] >= -half && v[1] <= half && v[2] >= -half && v[2] <= half) return i;
    }
    return std::nullopt;
}

ConditionedWalk sample_conditioned_walk(const LatticePoint& start, const StopRule& terminal,
                                        const std::vector<LatticePoint>& avoid, RandomSource& rng,
                                        uint64_t max_attempts, uint64_t hard_cap) {
    std::unordered_set<LatticePoint, PointHash> forbidden(avoid.begin(), avoid.end());
    ConditionedWalk out;
    for (uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
        out.attempts = attempt;
        LatticePath path(start);
        LatticePoint p = start;
        int fired = terminal.check(p, 0);
        if (fired >= 0) {
            out.path = std::move(path);
            out.ok = true;
            return out;
        }
        bool rejected = false;
        for (uint64_t k = 0; k < hard_cap; ++k) {
            int d = rng.next_direction();
            p = step(p, d);
            if (forbidden.count(p)) { rejected = true; break; }  // forbidden from time 1 on
            path.push(d);
            fired = terminal.check(p, k + 1);
            if (fired >= 0) {
                out.path = std::move(path);
                out.ok = true;
                return out;
            }
        }
        if (!rejected) break;  // hard cap without termination: give up
    }
    out.ok = false;
    return out;
}

} // namespace lerw
