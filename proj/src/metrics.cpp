#include "lerw/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace lerw {

namespace {

i128 directed_max_min_d2(std::span<const LatticePoint> a, std::span<const LatticePoint> b) {
    i128 worst = 0;
    for (const auto& p : a) {
        i128 best = -1;
        for (const auto& q : b) {
            i128 d = dist2(p, q);
            if (best < 0 || d < best) best = d;
            if (best == 0) break;
        }
        if (best > worst) worst = best;
    }
    return worst;
}

} // namespace

double hausdorff_distance(std::span<const LatticePoint> a, std::span<const LatticePoint> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff: empty point set");
    int n = a[0].n;
    for (const auto& p : a)
        if (p.n != n) throw std::invalid_argument("hausdorff: mixed scales");
    for (const auto& q : b)
        if (q.n != n) throw std::invalid_argument("hausdorff: mixed scales");
    i128 d2 = directed_max_min_d2(a, b);
    i128 e2 = directed_max_min_d2(b, a);
    if (e2 > d2) d2 = e2;
    return std::sqrt((double)d2) / std::ldexp(1.0, n);
}

} // namespace lerw
