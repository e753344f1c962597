#include "lerw/tube.hpp"

#include <stdexcept>
#include <string>

namespace lerw {

TubePartition build_tube_partition(int m, int m0, int n) {
    if (m0 < 2) throw std::invalid_argument("tube: m0 must be >= 2");
    if (m < 1) throw std::invalid_argument("tube: m must be >= 1");
    if (n < m + m0)
        throw std::invalid_argument("tube: need n >= m + m0 (got n=" + std::to_string(n) + ", m+m0=" +
                                    std::to_string(m + m0) + ")");
    TubePartition t;
    t.m = m;
    t.m0 = m0;
    t.n = n;
    t.q = Dyadic(1, m + m0);
    t.a.reserve(2 * m0 + 2);
    for (int i = 0; i <= 2 * m0 + 1; ++i) t.a.push_back(t.plane_coord(i));
    return t;
}

Domain TubePartition::cube(int i) const {
    return slab(plane_coord(i), false, plane_coord(i + 1), false);
}

Domain TubePartition::slab(const Dyadic& lo, bool lo_open, const Dyadic& hi, bool hi_open) const {
    return Domain::slab(n, 0, lo, lo_open, hi, hi_open, transverse());
}

Domain TubePartition::plane_piece(const Dyadic& x) const {
    return Domain::slab(n, 0, x, false, x, false, transverse());
}

Domain TubePartition::face(const Dyadic& x) const {
    return Domain::slab(n, 0, x, false, x, false, Dyadic(1, m + 1));
}

Domain TubePartition::thin_cuboid(const LatticePoint& w) const {
    if (w.n != n) throw std::invalid_argument("tube: cuboid anchor scale mismatch");
    Domain base = Domain::slab(n, 0, -q, false, q, false, transverse());
    return Domain::translate(base, w);
}

} // namespace lerw
