#include "lerw/events.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "lerw/stats.hpp"

namespace lerw {

namespace {

i64 dist2(const std::array<i64, 3>& a, const std::array<i64, 3>& b) {
    const i64 dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

// Exact comparison of squared lattice distances against a dyadic radius at
// scale n: d < r iff (d^2 << 2*max(0,k-n)) < (num << max(0,n-k))^2.
struct RadiusCmp {
    i128 num2 = 0;
    int up = 0;
    double u = 0;  // radius in lattice units, for box sizing only

    RadiusCmp() = default;
    RadiusCmp(const Dyadic& r, int n) {
        if (r.num <= 0) throw std::invalid_argument("radius must be positive");
        up = std::max(0, r.k - n);
        const i128 num = (i128)r.num << std::max(0, n - r.k);
        num2 = num * num;
        u = (double)r.num * std::pow(2.0, (double)(n - r.k));
    }
    bool lt(i64 d2) const { return ((i128)d2 << (2 * up)) < num2; }
    bool ge(i64 d2) const { return !lt(d2); }
};

uint64_t pack21(i64 x, i64 y, i64 z) {
    constexpr i64 off = (i64)1 << 20;
    if (x >= off || x <= -off || y >= off || y <= -off || z >= off || z <= -off)
        throw std::overflow_error("coordinate too large to pack");
    return ((uint64_t)(x + off) << 42) | ((uint64_t)(y + off) << 21) | (uint64_t)(z + off);
}

i64 floor_div(i64 a, i64 b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Sparse tables of per-axis extreme vertex indices, O(1) bounding box and
// extreme-vertex queries over any index range.
struct RangeExtremes {
    const std::vector<std::array<i64, 3>>* v = nullptr;
    int levels = 0;
    // tab[axis][0] = argmin, tab[axis][1] = argmax
    std::vector<uint32_t> tab[3][2];
    size_t n = 0;

    explicit RangeExtremes(const std::vector<std::array<i64, 3>>& verts) : v(&verts), n(verts.size()) {
        levels = 1;
        while (((size_t)1 << levels) <= n) ++levels;
        for (int a = 0; a < 3; ++a)
            for (int m = 0; m < 2; ++m) {
                auto& t = tab[a][m];
                t.resize((size_t)levels * n);
                for (size_t i = 0; i < n; ++i) t[i] = (uint32_t)i;
                for (int lv = 1; lv < levels; ++lv) {
                    const size_t half = (size_t)1 << (lv - 1);
                    for (size_t i = 0; i + ((size_t)1 << lv) <= n; ++i) {
                        uint32_t l = t[(size_t)(lv - 1) * n + i];
                        uint32_t r = t[(size_t)(lv - 1) * n + i + half];
                        i64 vl = verts[l][(size_t)a], vr = verts[r][(size_t)a];
                        bool take_r = m == 0 ? vr < vl : vr > vl;
                        t[(size_t)lv * n + i] = take_r ? r : l;
                    }
                }
            }
    }

    uint32_t arg(int axis, int minmax, size_t a, size_t b) const {
        int lv = 0;
        while (((size_t)2 << lv) <= b - a + 1) ++lv;
        const auto& t = tab[axis][minmax];
        uint32_t x = t[(size_t)lv * n + a];
        uint32_t y = t[(size_t)lv * n + b + 1 - ((size_t)1 << lv)];
        i64 vx = (*v)[x][(size_t)axis], vy = (*v)[y][(size_t)axis];
        if (minmax == 0) return vy < vx ? y : x;
        return vy > vx ? y : x;
    }
};

// Largest squared distance from p to the box [mn, mx] (attained at a corner).
i64 corner_max_d2(const i64 mn[3], const i64 mx[3], const std::array<i64, 3>& p) {
    i64 s = 0;
    for (int a = 0; a < 3; ++a) {
        const i64 d = std::max(mx[a] - p[(size_t)a], p[(size_t)a] - mn[a]);
        s += d * d;
    }
    return s;
}

} // namespace

std::vector<LatticePoint> detect_quasi_loops(const SimplePath& path, const Dyadic& s1, const Dyadic& s2) {
    if (path.num_vertices() == 0) throw std::invalid_argument("empty path");
    const Dyadic gap = s2 - s1;
    if (!(gap.num > 0)) throw std::invalid_argument("need s1 < s2");
    const int n = path.n;
    const RadiusCmp c1(s1, n), c2(s2, n);
    const i64 r1 = (i64)std::ceil(c1.u);

    std::unordered_set<uint64_t> seen;
    std::vector<LatticePoint> centers;
    const size_t cap = 50000000;
    for (size_t i = 0; i < path.num_vertices(); ++i) {
        const auto& v = path.verts[i];
        for (i64 dx = -r1; dx <= r1; ++dx)
            for (i64 dy = -r1; dy <= r1; ++dy)
                for (i64 dz = -r1; dz <= r1; ++dz) {
                    if (!c1.lt(dx * dx + dy * dy + dz * dz)) continue;
                    if (!seen.insert(pack21(v[0] + dx, v[1] + dy, v[2] + dz)).second) continue;
                    if (seen.size() > cap) throw std::runtime_error("too many candidate centers");
                    const std::array<i64, 3> x{v[0] + dx, v[1] + dy, v[2] + dz};
                    // One pass: consecutive visits to B(x, s1) with the
                    // running excursion maximum between them.
                    ptrdiff_t last = -1;
                    i64 excursion = 0;
                    for (size_t t = 0; t < path.num_vertices(); ++t) {
                        const i64 d2 = dist2(path.verts[t], x);
                        if (c1.lt(d2)) {
                            if (last >= 0 && c2.ge(excursion)) {
                                centers.push_back(LatticePoint{x[0], x[1], x[2], n});
                                break;
                            }
                            last = (ptrdiff_t)t;
                            excursion = 0;
                        } else if (last >= 0) {
                            excursion = std::max(excursion, d2);
                        }
                    }
                }
    }
    std::sort(centers.begin(), centers.end());
    return centers;
}

bool has_quasi_loop(const SimplePath& path, const Dyadic& s1, const Dyadic& s2) {
    const size_t L = path.num_vertices();
    if (L < 3) return false;
    const Dyadic gap = s2 - s1;
    if (!(gap.num > 0)) throw std::invalid_argument("need s1 < s2");
    const int n = path.n;
    const RadiusCmp c1(s1, n), c2(s2, n), cpair(s1.shifted(1), n), cdiff(gap, n), csum(s2 + s1, n);
    const auto& v = path.verts;
    const RangeExtremes ext(v);

    const i64 cell = std::max<i64>(1, (i64)std::ceil(2.0 * c1.u));
    std::unordered_map<uint64_t, std::vector<uint32_t>> grid;
    grid.reserve(L * 2);

    const i64 r1 = (i64)std::ceil(c1.u);

    auto pair_witness = [&](size_t k1, size_t k2) -> bool {
        const i64 d2e = dist2(v[k1], v[k2]);
        if (!cpair.lt(d2e)) return false;  // endpoints must be within 2 s1

        i64 mn[3], mx[3];
        uint32_t lo_arg[3], hi_arg[3];
        for (int a = 0; a < 3; ++a) {
            lo_arg[a] = ext.arg(a, 0, k1, k2);
            hi_arg[a] = ext.arg(a, 1, k1, k2);
            mn[a] = v[lo_arg[a]][(size_t)a];
            mx[a] = v[hi_arg[a]][(size_t)a];
        }
        // The excursion must leave B(x, s2) for an x within s1 of both
        // endpoints, so it must move s2 - s1 from each endpoint.
        if (cdiff.lt(corner_max_d2(mn, mx, v[k1]))) return false;
        if (cdiff.lt(corner_max_d2(mn, mx, v[k2]))) return false;

        // Exact lower bound on the excursion spread from the six per-axis
        // extreme vertices.
        i64 L1 = 0, L2 = 0;
        for (int a = 0; a < 3; ++a) {
            L1 = std::max({L1, dist2(v[lo_arg[a]], v[k1]), dist2(v[hi_arg[a]], v[k1])});
            L2 = std::max({L2, dist2(v[lo_arg[a]], v[k2]), dist2(v[hi_arg[a]], v[k2])});
        }
        if (c1.lt(d2e) && (c2.ge(L1) || c2.ge(L2))) return true;  // center at an endpoint

        // Any candidate center sits in the lens of the two s1 balls, whose
        // farthest point from the endpoint midpoint is the rim circle at
        // sqrt(s1^2 - |d|^2/4); combined with the box bound from the midpoint
        // this rejects pairs whose excursion cannot reach s2 from anywhere in
        // the lens.  Conservative slack keeps the float screen sound.
        {
            const std::array<i64, 3> dbl_mid{v[k1][0] + v[k2][0], v[k1][1] + v[k2][1], v[k1][2] + v[k2][2]};
            i64 s = 0;
            for (int a = 0; a < 3; ++a) {
                const i64 d = std::max(2 * mx[a] - dbl_mid[(size_t)a], dbl_mid[(size_t)a] - 2 * mn[a]);
                s += d * d;
            }
            const double from_mid = std::sqrt((double)s) / 2.0;
            const double r_lens = std::sqrt(std::max(0.0, c1.u * c1.u - (double)d2e / 4.0));
            if (from_mid + r_lens + 1e-6 < c2.u) return false;
        }

        // Far excursion: any lens lattice point is a witness; try rounded
        // midpoints before enumerating.
        if (csum.ge(L1)) {
            for (int bits = 0; bits < 8; ++bits) {
                std::array<i64, 3> x;
                for (int a = 0; a < 3; ++a) {
                    const i64 tw = v[k1][(size_t)a] + v[k2][(size_t)a];
                    x[(size_t)a] = (bits >> a) & 1 ? (tw + 1) >> 1 : tw >> 1;
                }
                if (c1.lt(dist2(x, v[k1])) && c1.lt(dist2(x, v[k2]))) return true;
            }
        }

        // Lens enumeration with per-center O(1) accept (extreme vertices) and
        // reject (box corners); only undecided centers scan the excursion.
        i64 blo[3], bhi[3];
        for (int a = 0; a < 3; ++a) {
            blo[a] = std::max(v[k1][(size_t)a], v[k2][(size_t)a]) - r1;
            bhi[a] = std::min(v[k1][(size_t)a], v[k2][(size_t)a]) + r1;
            if (blo[a] > bhi[a]) return false;
        }
        std::array<i64, 3> x;
        for (x[0] = blo[0]; x[0] <= bhi[0]; ++x[0])
            for (x[1] = blo[1]; x[1] <= bhi[1]; ++x[1])
                for (x[2] = blo[2]; x[2] <= bhi[2]; ++x[2]) {
                    if (!c1.lt(dist2(x, v[k1])) || !c1.lt(dist2(x, v[k2]))) continue;
                    i64 lx = 0;
                    for (int a = 0; a < 3; ++a)
                        lx = std::max({lx, dist2(v[lo_arg[a]], x), dist2(v[hi_arg[a]], x)});
                    if (c2.ge(lx)) return true;
                    if (c2.lt(corner_max_d2(mn, mx, x))) continue;  // whole excursion inside B(x, s2)
                    for (size_t t = k1; t <= k2; ++t)
                        if (c2.ge(dist2(v[t], x))) return true;
                }
        return false;
    };

    for (size_t k2 = 0; k2 < L; ++k2) {
        const i64 cx = floor_div(v[k2][0], cell), cy = floor_div(v[k2][1], cell), cz = floor_div(v[k2][2], cell);
        for (i64 dx = -1; dx <= 1; ++dx)
            for (i64 dy = -1; dy <= 1; ++dy)
                for (i64 dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find(pack21(cx + dx, cy + dy, cz + dz));
                    if (it == grid.end()) continue;
                    for (uint32_t k1 : it->second)
                        if (pair_witness(k1, k2)) return true;
                }
        grid[pack21(cx, cy, cz)].push_back((uint32_t)k2);
    }
    return false;
}

EventReport check_F_events(const SimplePath& path, double beta, double delta, double eps, double r,
                           uint64_t mc_samples, RandomSource& rng) {
    if (!(r > 0)) throw std::invalid_argument("r must be positive");
    if (mc_samples == 0) throw std::invalid_argument("mc_samples must be positive");
    EventReport rep;
    rep.taus = compute_tau_sequence(path, beta, delta, eps);
    const size_t len = path.len();
    const int n = path.n;

    rep.increments = (double)rep.taus.N <= std::pow(delta, -3.0) ? Verdict::pass : Verdict::fail;

    // Hittability: every lattice point within r of the path must be nearly
    // certain to touch it before leaving B(x, sqrt r).  Candidate centers are
    // enumerated from boxes around the vertices; thresholds round outward so
    // no qualifying point is missed.
    const double p4n = std::pow(4.0, (double)n);
    const i64 near_t2 = (i64)std::ceil(r * r * p4n);         // dist(x, path) <= r
    const i64 exit_t2 = std::max<i64>(1, (i64)std::floor(r * p4n));  // leave B(x, sqrt r)
    const double bound = std::pow(delta, 5.0);

    std::unordered_set<uint64_t> on_path;
    for (const auto& pv : path.verts) on_path.insert(pack21(pv[0], pv[1], pv[2]));

    const i64 rbox = (i64)std::ceil(r * std::pow(2.0, (double)n));
    std::unordered_set<uint64_t> seen;
    bool any_undecided = false, any_fail = false;
    for (const auto& pv : path.verts) {
        for (i64 dx = -rbox; dx <= rbox; ++dx)
            for (i64 dy = -rbox; dy <= rbox; ++dy)
                for (i64 dz = -rbox; dz <= rbox; ++dz) {
                    if (dx * dx + dy * dy + dz * dz > near_t2) continue;
                    const i64 x0 = pv[0] + dx, y0 = pv[1] + dy, z0 = pv[2] + dz;
                    if (!seen.insert(pack21(x0, y0, z0)).second) continue;
                    if (seen.size() > 1000000) throw std::runtime_error("too many hittability centers");
                    ++rep.points_checked;
                    if (on_path.count(pack21(x0, y0, z0))) continue;  // escape probability is zero
                    Accumulator acc;
                    for (uint64_t sIdx = 0; sIdx < mc_samples; ++sIdx) {
                        i64 px = x0, py = y0, pz = z0;
                        int escaped = 1;
                        for (;;) {
                            const auto st = kDirections[rng.next_direction()];
                            px += st[0];
                            py += st[1];
                            pz += st[2];
                            if (on_path.count(pack21(px, py, pz))) {
                                escaped = 0;
                                break;
                            }
                            const i64 ddx = px - x0, ddy = py - y0, ddz = pz - z0;
                            if (ddx * ddx + ddy * ddy + ddz * ddz >= exit_t2) break;
                        }
                        acc.add(escaped);
                    }
                    const double phat = acc.mean();
                    const double se = acc.stderr_mean();
                    if (phat > rep.worst_phat) {
                        rep.worst_phat = phat;
                        rep.worst_se = se;
                    }
                    if (phat - 4 * se > bound) any_fail = true;
                    else if (phat + 4 * se > bound) any_undecided = true;
                }
    }
    rep.hittability = any_fail ? Verdict::fail : any_undecided ? Verdict::undecided : Verdict::pass;

    // Isolation: away from each increment mark, the earlier and later parts
    // of the path keep distance r^(1/3).
    const i64 iso_t2 = (i64)std::ceil(std::pow(r, 2.0 / 3.0) * p4n);
    for (size_t l = 0; l < rep.taus.taus.size(); ++l) {
        const auto& xl = path.verts[rep.taus.taus[l]];
        bool bad = false;
        if (l >= 1) {
            const size_t hi = rep.taus.taus[l - 1];
            for (size_t t = 0; t <= hi && !bad; ++t)
                if (dist2(path.verts[t], xl) < iso_t2) bad = true;
        }
        if (!bad && l + 1 < rep.taus.taus.size()) {
            const size_t lo = rep.taus.taus[l + 1];
            for (size_t t = lo; t <= len && !bad; ++t)
                if (dist2(path.verts[t], xl) < iso_t2) bad = true;
        }
        if (bad) rep.isolation_violations.push_back(l);
    }
    rep.isolation = rep.isolation_violations.empty() ? Verdict::pass : Verdict::fail;

    if (rep.increments == Verdict::fail || rep.hittability == Verdict::fail || rep.isolation == Verdict::fail)
        rep.overall = Verdict::fail;
    else if (rep.hittability == Verdict::undecided)
        rep.overall = Verdict::undecided;
    else
        rep.overall = Verdict::pass;
    return rep;
}

KEventReport check_K_event(const SimplePath& path, double beta, double delta, double eps) {
    if (!(beta > 1.0 && beta <= 5.0 / 3.0 + 1e-12)) throw std::invalid_argument("beta must lie in (1, 5/3]");
    if (!(delta > 0 && delta < 0.1) || !(eps > 0 && eps < 0.1))
        throw std::invalid_argument("delta and eps must lie in (0, 1/10)");
    if (path.num_vertices() == 0) throw std::invalid_argument("empty path");
    KEventReport rep;
    const int n = path.n;
    rep.window = (size_t)std::floor(2.0 * delta * std::pow(2.0, beta * (double)n));
    const double thr = std::pow(delta, 1.0 / beta - eps) / 2.0;
    rep.threshold_sq = (i64)std::ceil(thr * thr * std::pow(4.0, (double)n));
    const size_t len = path.len();
    for (size_t s = 0; s < len; ++s) {
        const size_t hi = std::min(len, s + rep.window);
        for (size_t t = s + 1; t <= hi; ++t) {
            if (dist2(path.verts[s], path.verts[t]) >= rep.threshold_sq) {
                rep.occurred = true;
                rep.s = s;
                rep.t = t;
                return rep;
            }
        }
    }
    return rep;
}

} // namespace lerw
