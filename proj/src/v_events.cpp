#include "lerw/v_events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace lerw {

namespace {

constexpr double kBetaMax = 5.0 / 3.0 + 1e-12;

// Squared Euclidean distance, wide enough for coordinates up to ~2^31.
inline i128 d2(const std::array<i64, 3>& a, const std::array<i64, 3>& b) {
    const i128 dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

inline i64 linf(const std::array<i64, 3>& a, const std::array<i64, 3>& b) {
    return std::max({std::llabs(a[0] - b[0]), std::llabs(a[1] - b[1]), std::llabs(a[2] - b[2])});
}

} // namespace

VEventReport detect_v_events(const SimplePath& prefix, const LatticePath& walk,
                             const TubePartition& tube, int box_m, double chat, double beta) {
    if (!(beta > 1.0) || beta > kBetaMax)
        throw std::invalid_argument("detect_v_events: beta must lie in (1, 5/3]");
    if (!(chat > 0.0))
        throw std::invalid_argument("detect_v_events: chat must be positive");
    if (box_m < 1)
        throw std::invalid_argument("detect_v_events: box half-width must be at least 2^-m");
    if (prefix.empty_path() || walk.empty_path())
        throw std::invalid_argument("detect_v_events: empty prefix or walk");
    if (tube.n != prefix.n || tube.n != walk.n)
        throw std::invalid_argument("detect_v_events: prefix, walk and tube scales differ");

    const int m = tube.m, m0 = tube.m0, n = tube.n;
    if (n < m + m0 + 1)
        throw std::invalid_argument("detect_v_events: cut window plane a_2 + q/2 is not on the lattice");
    if (n > 30)
        throw std::invalid_argument("detect_v_events: scale too fine for 64-bit coordinates");

    const i64 tm = 1LL << (n - m);          // 2^-m in lattice units
    const i64 q = 1LL << (n - m - m0);      // 2^-(m+m0)
    const i64 hq = q / 2;
    const i64 half = tm / 2;                // face half-width 2^-(m+1)
    const i64 box = (i64)box_m * tm;
    auto plane = [&](int i) { return (2LL * i - 1) * tm; };  // a_i relative to the anchor

    // The box must sit inside the 3/4-ball: 3 box^2 <= (3/4)^2 4^n.
    if ((i128)48 * box * box > (i128)9 * ((i128)1 << (2 * n)))
        throw std::invalid_argument("detect_v_events: box does not fit inside the 3/4-ball");

    // Prefix: simple, from the origin, inside the box, exiting through the +x face.
    if (prefix.verts[0] != std::array<i64, 3>{0, 0, 0})
        throw std::invalid_argument("detect_v_events: prefix must start at the origin");
    if (!prefix.is_simple())
        throw std::invalid_argument("detect_v_events: prefix is not simple");
    for (const auto& v : prefix.verts)
        if (std::max({std::llabs(v[0]), std::llabs(v[1]), std::llabs(v[2])}) > box)
            throw std::invalid_argument("detect_v_events: prefix leaves the box");
    const std::array<i64, 3> zv = prefix.verts.back();
    if (std::max({std::llabs(zv[0]), std::llabs(zv[1]), std::llabs(zv[2])}) != box)
        throw std::invalid_argument("detect_v_events: prefix exit point not on the box boundary");
    if (zv[0] != box)
        throw std::invalid_argument("detect_v_events: prefix exit point not on the +x face");
    if (walk.verts[0] != zv)
        throw std::invalid_argument("detect_v_events: walk must start at the prefix endpoint");

    const std::array<i64, 3> wv = {zv[0] + 100LL * m0 * tm, zv[1], zv[2]};

    VEventReport rep;
    rep.m = m;
    rep.m0 = m0;
    rep.n = n;
    rep.beta = beta;
    rep.chat = chat;
    rep.box_units = box;
    rep.z = LatticePoint{zv[0], zv[1], zv[2], n};
    rep.w = LatticePoint{wv[0], wv[1], wv[2], n};
    rep.u1_bound = chat * (double)m0 * std::pow(2.0, beta * (double)(n - m));

    const auto& X = walk.verts;

    // First exit of the unit ball; all event clauses live on [0, exit_time].
    const i128 unit2 = (i128)1 << (2 * n);
    for (size_t j = 0; j < X.size(); ++j) {
        const i128 r2 = (i128)X[j][0] * X[j][0] + (i128)X[j][1] * X[j][1] + (i128)X[j][2] * X[j][2];
        if (r2 >= unit2) {
            rep.exit_time = (ptrdiff_t)j;
            break;
        }
    }
    if (rep.exit_time < 0)
        throw std::invalid_argument("detect_v_events: walk never exits the unit ball");
    const size_t tex = (size_t)rep.exit_time;

    auto on_piece = [&](const std::array<i64, 3>& v, i64 px, i64 h) {
        return v[0] == px && std::llabs(v[1] - wv[1]) <= h && std::llabs(v[2] - wv[2]) <= h;
    };
    auto in_slab = [&](const std::array<i64, 3>& v, i64 lo, i64 hi) {
        return v[0] >= lo && v[0] <= hi && std::llabs(v[1] - wv[1]) <= tm && std::llabs(v[2] - wv[2]) <= tm;
    };

    const i64 r0 = (100LL * m0 - 1) * tm;
    const i64 r3 = 40LL * m0 * tm;
    for (size_t j = 0; j <= tex && rep.tau0 < 0; ++j)
        if (linf(X[j], zv) >= r0) rep.tau0 = (ptrdiff_t)j;
    for (size_t j = 0; j <= tex && rep.tau1 < 0; ++j)
        if (on_piece(X[j], wv[0] + plane(1), tm)) rep.tau1 = (ptrdiff_t)j;
    for (size_t j = 0; j <= tex && rep.tau2 < 0; ++j)
        if (on_piece(X[j], wv[0] + plane(2 * m0 + 1), tm)) rep.tau2 = (ptrdiff_t)j;
    if (rep.tau1 >= 0) {
        const i128 r32 = (i128)r3 * r3;
        for (size_t j = (size_t)rep.tau1; j <= tex && rep.tau3 < 0; ++j)
            if (d2(X[j], X[(size_t)rep.tau1]) >= r32) rep.tau3 = (ptrdiff_t)j;
    }

    // V1: arrival through the entry face, staying near the half-line from z.
    if (rep.tau0 < 0) {
        rep.v1 = {false, 1, -1};
    } else if (!on_piece(X[(size_t)rep.tau0], wv[0] + plane(0), half)) {
        rep.v1 = {false, 2, rep.tau0};
    } else {
        rep.v1 = {true, 0, rep.tau0};
        const i128 rl2 = (i128)(m0 * tm) * (m0 * tm);
        for (size_t j = 0; j <= (size_t)rep.tau0; ++j) {
            i128 dd;
            if (X[j][0] >= zv[0]) {
                const i128 dy = X[j][1] - zv[1], dz = X[j][2] - zv[2];
                dd = dy * dy + dz * dz;
            } else {
                dd = d2(X[j], zv);
            }
            if (dd > rl2) {
                rep.v1 = {false, 3, (ptrdiff_t)j};
                break;
            }
        }
    }

    // V2: confined crossing from the entry face to the first interior plane.
    if (rep.tau0 < 0 || rep.tau1 < 0 || rep.tau1 < rep.tau0) {
        rep.v2 = {false, 1, -1};
    } else {
        rep.v2 = {true, 0, rep.tau1};
        for (size_t j = (size_t)rep.tau0; j <= (size_t)rep.tau1; ++j)
            if (!in_slab(X[j], wv[0] - 2 * tm, wv[0] + plane(1))) {
                rep.v2 = {false, 2, (ptrdiff_t)j};
                break;
            }
        if (rep.v2.ok && !on_piece(X[(size_t)rep.tau1], wv[0] + plane(1), half))
            rep.v2 = {false, 3, rep.tau1};
    }

    // V3: good cut times.  Clauses (iii) and (iv) do not depend on k, so they
    // gate the whole scan; (i) comes from the cut-time set of X[tau1, tau3],
    // (ii) from monotone prefix/suffix slab scans plus the position window.
    if (rep.tau1 < 0 || rep.tau2 < 0 || rep.tau3 < 0) {
        rep.v3 = {false, 1, -1};
    } else {
        const size_t t1 = (size_t)rep.tau1, t2 = (size_t)rep.tau2, t3 = (size_t)rep.tau3;
        TubeStageFlag gate = {true, 0, -1};
        const i128 riii2 = (i128)(103LL * m0 * tm) * (103LL * m0 * tm);
        for (size_t j = t2; j <= t3 && gate.ok; ++j)
            if (d2(X[j], zv) < riii2) gate = {false, 2, (ptrdiff_t)j};
        if (gate.ok) {
            const i128 riv2 = (i128)(41LL * m0 * tm) * (41LL * m0 * tm);
            if (!(d2(X[t3], wv) < riv2 && X[t3][0] >= zv[0] + 138LL * m0 * tm))
                gate = {false, 2, (ptrdiff_t)t3};
        }
        if (gate.ok && t2 < t1)
            gate = {false, 2, rep.tau2};
        if (gate.ok) {
            LatticePath sub = walk.segment(t1, t3);
            std::vector<char> is_cut(sub.num_vertices(), 0);
            for (size_t t : cut_times(sub)) is_cut[t] = 1;

            const i64 lo1 = wv[0], hi1 = wv[0] + plane(2) + q;
            const i64 lo2 = wv[0] + plane(2), hi2 = wv[0] + plane(2 * m0 + 1);
            size_t p1 = t1;  // largest index with X[t1, p1] inside H[0, a_2 + q]
            while (p1 < t3 && in_slab(X[p1 + 1], lo1, hi1)) ++p1;
            size_t s2 = t2;  // smallest index with X[s2, t2] inside H[a_2, a_{2m0+1}]
            while (s2 > t1 && in_slab(X[s2 - 1], lo2, hi2)) --s2;

            const i64 wlo = wv[0] + plane(2) + hq, whi = wv[0] + plane(2) + q;
            const size_t k_lo = std::max(t1, s2);
            const size_t k_hi = std::min({t3, t2, p1});
            for (size_t k = k_lo; k <= k_hi; ++k) {
                if (!is_cut[k - t1]) continue;
                if (X[k][0] < wlo || X[k][0] > whi) continue;
                if (std::llabs(X[k][1] - wv[1]) > tm || std::llabs(X[k][2] - wv[2]) > tm) continue;
                rep.good_cuts.push_back(k);
            }
        }
        if (!rep.good_cuts.empty()) {
            rep.k_star = (ptrdiff_t)rep.good_cuts.front();
            rep.v3 = {true, 0, rep.k_star};
        } else {
            rep.v3 = gate.ok ? TubeStageFlag{false, 2, -1} : gate;
        }
    }

    // V4: the loop-erasure of X[k_star, tau3] must cross the mid plane early.
    if (rep.k_star < 0) {
        rep.v4 = {false, 1, -1};
    } else {
        rep.xi = erase_loops(walk.segment((size_t)rep.k_star, (size_t)rep.tau3));
        for (size_t j = 0; j < rep.xi.num_vertices() && rep.u1 < 0; ++j)
            if (on_piece(rep.xi.verts[j], wv[0] + plane(m0), tm)) rep.u1 = (ptrdiff_t)j;
        if (rep.u1 >= 0 && (double)rep.u1 <= rep.u1_bound)
            rep.v4 = {true, 0, rep.u1};
        else
            rep.v4 = {false, 2, rep.u1};
    }

    // V5: after the detour the walk keeps clear of z until it leaves the ball.
    if (rep.tau3 < 0) {
        rep.v5 = {false, 1, -1};
    } else {
        rep.v5 = {true, 0, rep.tau3};
        const i128 r52 = (i128)(110LL * m0 * tm) * (110LL * m0 * tm);
        for (size_t j = (size_t)rep.tau3; j <= tex; ++j)
            if (d2(X[j], zv) < r52) {
                rep.v5 = {false, 2, (ptrdiff_t)j};
                break;
            }
    }

    rep.all = rep.v1.ok && rep.v2.ok && rep.v3.ok && rep.v4.ok && rep.v5.ok;
    return rep;
}

} // namespace lerw
