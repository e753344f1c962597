#include "lerw/net.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace lerw {

namespace {

bool zyx_less(const LatticePoint& a, const LatticePoint& b) {
    if (a.z != b.z) return a.z < b.z;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

i64 floor_div(i64 a, i64 b) {
    i64 q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

struct Candidate {
    std::vector<LatticePoint> points;
    std::unordered_map<uint64_t, size_t> index;  // packed grid index -> points slot
};

uint64_t pack_grid(i64 i, i64 j, i64 l) {
    return pack_key(i, j, l);
}

Candidate build_candidate(const Domain& domain, const Box& box, i64 s_units, i64 ox, i64 oy, i64 oz) {
    Candidate c;
    i64 ilo = floor_div(box.lo[0] - ox, s_units), ihi = floor_div(box.hi[0] - ox, s_units) + 1;
    i64 jlo = floor_div(box.lo[1] - oy, s_units), jhi = floor_div(box.hi[1] - oy, s_units) + 1;
    i64 llo = floor_div(box.lo[2] - oz, s_units), lhi = floor_div(box.hi[2] - oz, s_units) + 1;
    for (i64 i = ilo; i <= ihi; ++i)
        for (i64 j = jlo; j <= jhi; ++j)
            for (i64 l = llo; l <= lhi; ++l) {
                i64 x = ox + i * s_units, y = oy + j * s_units, z = oz + l * s_units;
                if (domain.contains_xyz(x, y, z)) {
                    c.index.emplace(pack_grid(i, j, l), c.points.size());
                    c.points.push_back(LatticePoint{x, y, z, domain.scale()});
                }
            }
    return c;
}

bool covers(const Candidate& c, const std::vector<LatticePoint>& domain_pts, i64 s_units, i64 ox, i64 oy, i64 oz) {
    if (c.points.empty()) return false;
    i128 r2 = (i128)s_units * s_units;
    for (const auto& p : domain_pts) {
        i64 bi = floor_div(p.x - ox, s_units);
        i64 bj = floor_div(p.y - oy, s_units);
        i64 bl = floor_div(p.z - oz, s_units);
        bool ok = false;
        for (i64 di = -1; di <= 1 && !ok; ++di)
            for (i64 dj = -1; dj <= 1 && !ok; ++dj)
                for (i64 dl = -1; dl <= 1 && !ok; ++dl) {
                    auto it = c.index.find(pack_grid(bi + di, bj + dj, bl + dl));
                    if (it == c.index.end()) continue;
                    if (dist2(p, c.points[it->second]) < r2) ok = true;
                }
        if (!ok) return false;
    }
    return true;
}

} // namespace

size_t NetGrid::nearest(const LatticePoint& p) const {
    if (points.empty()) throw std::logic_error("net: empty");
    size_t best = 0;
    i128 bestd = dist2(p, points[0]);
    for (size_t i = 1; i < points.size(); ++i) {
        i128 d = dist2(p, points[i]);
        if (d < bestd) { bestd = d; best = i; }  // points sorted (z, y, x); first wins ties
    }
    return best;
}

NetGrid build_net(const Dyadic& spacing, const Domain& domain) {
    int n = domain.scale();
    if (spacing.num <= 0) throw std::invalid_argument("net: spacing must be positive");
    if (!spacing.representable_at(n) || spacing.scaled_num(n) < 1)
        throw std::invalid_argument("net: spacing below lattice resolution 2^-n");
    Box box = domain.bounding_box();
    if (!box.bounded()) throw std::invalid_argument("net: domain must be bounded");
    std::vector<LatticePoint> domain_pts = domain.lattice_points();
    if (domain_pts.empty()) throw std::invalid_argument("net: domain has no lattice points");

    Dyadic s = spacing;
    int halvings = 0;
    while (true) {
        i64 s_units = s.scaled_num(n);
        i64 half = s_units / 2;
        std::vector<std::array<i64, 3>> offsets = {{0, 0, 0}};
        if (half > 0) {
            offsets.clear();
            for (i64 ox : {(i64)0, half})
                for (i64 oy : {(i64)0, half})
                    for (i64 oz : {(i64)0, half}) offsets.push_back({ox, oy, oz});
        }
        for (const auto& off : offsets) {
            Candidate c = build_candidate(domain, box, s_units, off[0], off[1], off[2]);
            if (!covers(c, domain_pts, s_units, off[0], off[1], off[2])) continue;
            NetGrid net;
            net.spacing = s;
            net.requested = spacing;
            net.offset = LatticePoint{off[0], off[1], off[2], n};
            net.points = std::move(c.points);
            std::sort(net.points.begin(), net.points.end(), zyx_less);
            net.halvings = halvings;
            return net;
        }
        if (s_units == 1)
            throw std::logic_error("net: covering failed at lattice resolution");  // unreachable: unit grid covers
        s = s.shifted(-1);
        ++halvings;
    }
}

} // namespace lerw
