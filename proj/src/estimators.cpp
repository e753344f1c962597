#include "lerw/estimators.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "lerw/path.hpp"
#include "lerw/walk.hpp"

namespace lerw {

namespace {

using u128 = unsigned __int128;

// ---------------------------------------------------------------------------
// Indexed view of a bounded domain: point list, point -> index, and a dense
// bounding-box grid for O(1) membership in sampling loops.

struct DomainIndex {
    std::vector<LatticePoint> pts;
    Box box;
    i64 dx = 0, dy = 0, dz = 0;       // box extents
    std::vector<int32_t> grid;        // index into pts, or -1
    int scale = 0;

    explicit DomainIndex(const Domain& domain) {
        pts = domain.lattice_points();
        if (pts.empty()) throw std::invalid_argument("domain has no lattice points");
        scale = domain.scale();
        box = domain.bounding_box();
        if (!box.bounded()) throw std::invalid_argument("domain is unbounded");
        dx = box.hi[0] - box.lo[0] + 1;
        dy = box.hi[1] - box.lo[1] + 1;
        dz = box.hi[2] - box.lo[2] + 1;
        grid.assign((size_t)(dx * dy * dz), -1);
        for (size_t i = 0; i < pts.size(); ++i) grid[slot(pts[i].x, pts[i].y, pts[i].z)] = (int32_t)i;
    }

    size_t slot(i64 x, i64 y, i64 z) const {
        return (size_t)((x - box.lo[0]) * dy * dz + (y - box.lo[1]) * dz + (z - box.lo[2]));
    }
    // Index of (x, y, z), or -1 when the point is outside the domain.
    int32_t index(i64 x, i64 y, i64 z) const {
        if (x < box.lo[0] || x > box.hi[0] || y < box.lo[1] || y > box.hi[1] || z < box.lo[2] || z > box.hi[2])
            return -1;
        return grid[slot(x, y, z)];
    }
};

constexpr size_t kDenseSolveLimit = 3500;

// Solves (I - A/6) u = b on the indexed domain, where A is the interior
// adjacency.  Dense LU with one iterative-refinement pass for small systems,
// conjugate gradient (the matrix is symmetric positive definite) above that.
std::vector<double> solve_killed_system(const DomainIndex& di, const std::vector<double>& b) {
    const size_t n = di.pts.size();
    if (b.size() != n) throw std::invalid_argument("rhs size mismatch");

    auto neighbors = [&](size_t i, int32_t out[6]) {
        const auto& p = di.pts[i];
        int cnt = 0;
        for (int d = 0; d < 6; ++d) {
            const auto s = kDirections[d];
            int32_t j = di.index(p.x + s[0], p.y + s[1], p.z + s[2]);
            if (j >= 0) out[cnt++] = j;
        }
        return cnt;
    };

    if (n <= kDenseSolveLimit) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity((Eigen::Index)n, (Eigen::Index)n);
        int32_t nb[6];
        for (size_t i = 0; i < n; ++i) {
            int cnt = neighbors(i, nb);
            for (int t = 0; t < cnt; ++t) M((Eigen::Index)i, nb[t]) -= 1.0 / 6.0;
        }
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), (Eigen::Index)n);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        Eigen::VectorXd u = lu.solve(rhs);
        u += lu.solve(rhs - M * u);  // one refinement pass
        return std::vector<double>(u.data(), u.data() + n);
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * 7);
    int32_t nb[6];
    for (size_t i = 0; i < n; ++i) {
        trip.emplace_back((int)i, (int)i, 1.0);
        int cnt = neighbors(i, nb);
        for (int t = 0; t < cnt; ++t) trip.emplace_back((int)i, nb[t], -1.0 / 6.0);
    }
    Eigen::SparseMatrix<double> M((Eigen::Index)n, (Eigen::Index)n);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(200000);
    cg.compute(M);
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), (Eigen::Index)n);
    Eigen::VectorXd u = cg.solve(rhs);
    if (cg.info() != Eigen::Success) throw std::runtime_error("conjugate gradient did not converge");
    return std::vector<double>(u.data(), u.data() + n);
}

uint64_t pack_local(i64 x, i64 y, i64 z) {
    // Packing for bounded sampling loops; same 21-bit layout as the loop
    // eraser, duplicated here to keep this translation unit self-contained.
    constexpr i64 off = (i64)1 << 20;
    if (x >= off || x <= -off || y >= off || y <= -off || z >= off || z <= -off)
        throw std::overflow_error("coordinate too large to pack");
    return ((uint64_t)(x + off) << 42) | ((uint64_t)(y + off) << 21) | (uint64_t)(z + off);
}

std::string params_digest(std::initializer_list<std::pair<const char*, double>> kv) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : kv) {
        if (!first) os << ",";
        first = false;
        os << k << "=" << v;
    }
    return os.str();
}

} // namespace

// ---------------------------------------------------------------------------
// Exact solves

double exact_green(const Domain& domain, const LatticePoint& x, const LatticePoint& y) {
    DomainIndex di(domain);
    int32_t ix = di.index(x.x, x.y, x.z);
    int32_t iy = di.index(y.x, y.y, y.z);
    if (x.n != di.scale || y.n != di.scale) throw std::invalid_argument("point scale differs from domain scale");
    if (ix < 0 || iy < 0) return 0.0;  // a walk killed on exit never visits an exterior point
    std::vector<double> b(di.pts.size(), 0.0);
    b[(size_t)iy] = 1.0;
    return solve_killed_system(di, b)[(size_t)ix];
}

double exact_harmonic_measure(const Domain& domain, const LatticePoint& start,
                              const std::vector<LatticePoint>& target) {
    for (const auto& t : target)
        if (domain.contains(t)) throw std::invalid_argument("harmonic-measure target must lie outside the domain");
    if (!domain.contains(start)) {
        for (const auto& t : target)
            if (t.x == start.x && t.y == start.y && t.z == start.z) return 1.0;
        return 0.0;
    }
    DomainIndex di(domain);
    std::unordered_set<uint64_t> tset;
    for (const auto& t : target) tset.insert(pack_local(t.x, t.y, t.z));
    std::vector<double> b(di.pts.size(), 0.0);
    for (size_t i = 0; i < di.pts.size(); ++i) {
        const auto& p = di.pts[i];
        for (int d = 0; d < 6; ++d) {
            const auto s = kDirections[d];
            i64 qx = p.x + s[0], qy = p.y + s[1], qz = p.z + s[2];
            if (di.index(qx, qy, qz) < 0 && tset.count(pack_local(qx, qy, qz))) b[i] += 1.0 / 6.0;
        }
    }
    return solve_killed_system(di, b)[(size_t)di.index(start.x, start.y, start.z)];
}

int64_t spanning_tree_count(const Domain& domain) {
    DomainIndex di(domain);
    const size_t n = di.pts.size();
    if (n > 40) throw std::invalid_argument("tree count limited to 40 vertices");
    // Interior block of the wired Laplacian: every vertex has degree 6, each
    // interior neighbor contributes -1.  The determinant counts spanning
    // trees of the multigraph with all boundary vertices identified.
    std::vector<std::vector<i128>> m(n, std::vector<i128>(n, 0));
    for (size_t i = 0; i < n; ++i) {
        m[i][i] = 6;
        const auto& p = di.pts[i];
        for (int d = 0; d < 6; ++d) {
            const auto s = kDirections[d];
            int32_t j = di.index(p.x + s[0], p.y + s[1], p.z + s[2]);
            if (j >= 0) m[i][(size_t)j] -= 1;
        }
    }
    // Bareiss fraction-free elimination: every intermediate entry is an exact
    // minor determinant, so divisions are exact in integers.
    i128 prev = 1;
    for (size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            size_t swap_row = k + 1;
            while (swap_row < n && m[swap_row][k] == 0) ++swap_row;
            if (swap_row == n) return 0;
            std::swap(m[k], m[swap_row]);
            for (size_t j = 0; j < n; ++j) m[k][j] = -m[k][j];  // row swap flips the sign
        }
        for (size_t i = k + 1; i < n; ++i) {
            for (size_t j = k + 1; j < n; ++j) m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    i128 det = m[n - 1][n - 1];
    if (det < 0 || det > (i128)std::numeric_limits<int64_t>::max())
        throw std::overflow_error("tree count exceeds int64 range");
    return (int64_t)det;
}

GreenExtrapolation green_extrapolation() {
    GreenExtrapolation out;
    std::vector<double> radii = {6, 12, 24};
    std::vector<double> xs, ys, se;
    for (double r : radii) {
        Domain ball = Domain::ball(LatticePoint{0, 0, 0, 0}, Dyadic((i64)r, 0));
        double g = exact_green(ball, LatticePoint{0, 0, 0, 0}, LatticePoint{0, 0, 0, 0});
        out.in_ball.push_back(g);
        xs.push_back(1.0 / r);
        ys.push_back(g);
        se.push_back(1.0);
    }
    LineFit fit = fit_line_weighted(xs, ys, se);
    out.g0 = fit.intercept;
    out.c0 = -fit.slope;
    return out;
}

LerwLaw exact_lerw_law(const Domain& domain, int max_steps, size_t state_budget) {
    if (max_steps < 1 || max_steps > 49) throw std::invalid_argument("max_steps must lie in [1, 49]");
    const int scale = domain.scale();
    const LatticePoint origin{0, 0, 0, scale};
    if (!domain.contains(origin)) throw std::invalid_argument("domain must contain the origin");

    // State = direction codes of the running loop-erasure (always a simple
    // path from the origin).  Counts are trajectory counts at the current
    // depth; a trajectory absorbed after k steps carries weight 6^(max-k)
    // so that all numerators share the denominator 6^max_steps.
    auto replay = [&](const std::string& codes) {
        std::vector<LatticePoint> v{origin};
        for (char c : codes) v.push_back(step(v.back(), c - '0'));
        return v;
    };

    std::map<std::string, u128> states{{std::string(), (u128)1}};
    std::map<std::string, u128> absorbed;
    u128 pow6_rem = 1;  // 6^(max_steps - depth - 1) during the depth loop
    for (int d = 1; d < max_steps; ++d) pow6_rem *= 6;

    LerwLaw law;
    law.states_peak = states.size();
    for (int depth = 0; depth < max_steps; ++depth) {
        std::map<std::string, u128> next;
        for (const auto& [codes, cnt] : states) {
            auto verts = replay(codes);
            for (int dir = 0; dir < 6; ++dir) {
                LatticePoint q = step(verts.back(), dir);
                if (!domain.contains(q)) {
                    absorbed[codes + char('0' + dir)] += cnt * pow6_rem;
                    continue;
                }
                size_t hit = verts.size();
                for (size_t i = 0; i < verts.size(); ++i)
                    if (verts[i].x == q.x && verts[i].y == q.y && verts[i].z == q.z) { hit = i; break; }
                std::string nxt = hit < verts.size() ? codes.substr(0, hit) : codes + char('0' + dir);
                next[nxt] += cnt;
            }
        }
        states = std::move(next);
        law.states_peak = std::max(law.states_peak, (uint64_t)states.size());
        if (states.size() > state_budget) throw std::runtime_error("loop-erasure law state budget exceeded");
        pow6_rem /= 6;
    }

    u128 alive = 0;
    for (const auto& [codes, cnt] : states) alive += cnt;
    u128 denom = 1;
    for (int d = 0; d < max_steps; ++d) denom *= 6;
    law.mass_defect = (double)((long double)alive / (long double)denom);

    std::vector<std::pair<std::string, u128>> sorted(absorbed.begin(), absorbed.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
        return a.first < b.first;
    });
    for (const auto& [codes, numer] : sorted) {
        auto verts = replay(codes);
        LerwLaw::Entry e;
        e.path = path_from_vertices(verts);
        e.prob = (double)((long double)numer / (long double)denom);
        law.entries.push_back(std::move(e));
    }
    return law;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators

EstimateRecord mc_green(const Domain& domain, const LatticePoint& x, const LatticePoint& y, uint64_t samples,
                        RandomSource& rng) {
    if (samples == 0) throw std::invalid_argument("samples must be positive");
    DomainIndex di(domain);
    if (x.n != di.scale || y.n != di.scale) throw std::invalid_argument("point scale differs from domain scale");
    if (di.index(x.x, x.y, x.z) < 0) {
        return EstimateRecord{0.0, 0.0, samples, 0, params_digest({{"exterior_start", 1}})};
    }
    Accumulator acc;
    for (uint64_t s = 0; s < samples; ++s) {
        i64 px = x.x, py = x.y, pz = x.z;
        i64 visits = 0;
        while (di.index(px, py, pz) >= 0) {
            if (px == y.x && py == y.y && pz == y.z) ++visits;
            const auto st = kDirections[rng.next_direction()];
            px += st[0];
            py += st[1];
            pz += st[2];
        }
        acc.add(visits);
    }
    return EstimateRecord{acc.mean(), acc.stderr_mean(), samples, 0, ""};
}

namespace {

// Per-point first and second moments of visit counts, merged exactly.
struct VisitMoments {
    std::vector<i128> sum, sum_sq;
    void init(size_t n) {
        sum.assign(n, 0);
        sum_sq.assign(n, 0);
    }
    void merge(const VisitMoments& o) {
        for (size_t i = 0; i < sum.size(); ++i) {
            sum[i] += o.sum[i];
            sum_sq[i] += o.sum_sq[i];
        }
    }
};

} // namespace

std::vector<EstimateRecord> mc_green_all(const Domain& domain, const LatticePoint& x, uint64_t samples,
                                         uint64_t seed, int workers) {
    if (samples == 0) throw std::invalid_argument("samples must be positive");
    DomainIndex di(domain);
    if (x.n != di.scale) throw std::invalid_argument("point scale differs from domain scale");
    if (di.index(x.x, x.y, x.z) < 0) throw std::invalid_argument("start must lie inside the domain");
    const size_t npts = di.pts.size();

    VisitMoments init;
    init.init(npts);
    VisitMoments total = parallel_fold(samples, workers, init, [&](uint64_t s, VisitMoments& vm) {
        thread_local std::vector<i64> visits;
        thread_local std::vector<uint32_t> touched;
        if (visits.size() != npts) visits.assign(npts, 0);
        touched.clear();
        RandomSource rng(seed, s);
        i64 px = x.x, py = x.y, pz = x.z;
        for (;;) {
            int32_t idx = di.index(px, py, pz);
            if (idx < 0) break;
            if (visits[(size_t)idx]++ == 0) touched.push_back((uint32_t)idx);
            const auto st = kDirections[rng.next_direction()];
            px += st[0];
            py += st[1];
            pz += st[2];
        }
        for (uint32_t idx : touched) {
            i64 v = visits[idx];
            vm.sum[idx] += v;
            vm.sum_sq[idx] += (i128)v * v;
            visits[idx] = 0;
        }
    });

    std::vector<EstimateRecord> out(npts);
    for (size_t i = 0; i < npts; ++i) {
        long double n = (long double)samples;
        long double mean = (long double)total.sum[i] / n;
        long double var = 0;
        if (samples > 1) {
            i128 num = (i128)samples * total.sum_sq[i] - total.sum[i] * total.sum[i];
            var = (long double)num / (n * (n - 1));
        }
        out[i].value = (double)mean;
        out[i].std_err = (double)std::sqrt((double)(var / n));
        out[i].n_samples = samples;
        out[i].seed = seed;
    }
    return out;
}

AnnulusCheck check_annulus_exit(i64 a, i64 b, const LatticePoint& x, uint64_t samples, RandomSource& rng) {
    if (!(0 < a && a < b)) throw std::invalid_argument("need 0 < a < b");
    if (x.n != 0) throw std::invalid_argument("annulus check runs on the integer lattice");
    AnnulusCheck out;
    const double ax = std::sqrt((double)(x.x * x.x + x.y * x.y + x.z * x.z));
    out.formula = (1.0 / ax - 1.0 / (double)b) / (1.0 / (double)a - 1.0 / (double)b);
    const i64 a2 = a * a, b2 = b * b;
    i64 r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    if (r2 <= a2) {
        out.degenerate = true;
        out.empirical = EstimateRecord{1.0, 0.0, samples, 0, ""};
        out.formula = 1.0;
        return out;
    }
    if (r2 > b2) throw std::invalid_argument("start lies outside the annulus");
    Accumulator acc;
    for (uint64_t s = 0; s < samples; ++s) {
        i64 px = x.x, py = x.y, pz = x.z;
        for (;;) {
            const auto st = kDirections[rng.next_direction()];
            px += st[0];
            py += st[1];
            pz += st[2];
            i64 d2 = px * px + py * py + pz * pz;
            if (d2 <= a2) {
                acc.add(1);
                break;
            }
            if (d2 > b2) {
                acc.add(0);
                break;
            }
        }
    }
    out.empirical = EstimateRecord{acc.mean(), acc.stderr_mean(), samples, 0, ""};
    return out;
}

AnnulusCheck check_origin_hit(i64 b, const LatticePoint& x, uint64_t samples, RandomSource& rng) {
    if (b < 2) throw std::invalid_argument("need b >= 2");
    if (x.n != 0) throw std::invalid_argument("origin-hit check runs on the integer lattice");
    i64 r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    AnnulusCheck out;
    if (r2 == 0) {
        out.degenerate = true;
        out.empirical = EstimateRecord{1.0, 0.0, samples, 0, ""};
        out.formula = 1.0;
        return out;
    }
    if (r2 >= b * b) throw std::invalid_argument("start lies outside the ball");
    static const GreenExtrapolation kGreen = green_extrapolation();
    const double ax = std::sqrt((double)r2);
    out.formula = (kGreen.c0 / ax - kGreen.c0 / (double)b) / (kGreen.g0 - kGreen.c0 / (double)b);
    const i64 b2 = b * b;
    Accumulator acc;
    for (uint64_t s = 0; s < samples; ++s) {
        i64 px = x.x, py = x.y, pz = x.z;
        for (;;) {
            const auto st = kDirections[rng.next_direction()];
            px += st[0];
            py += st[1];
            pz += st[2];
            if (px == 0 && py == 0 && pz == 0) {
                acc.add(1);
                break;
            }
            if (px * px + py * py + pz * pz >= b2) {
                acc.add(0);
                break;
            }
        }
    }
    out.empirical = EstimateRecord{acc.mean(), acc.stderr_mean(), samples, 0, ""};
    return out;
}

GamblerCheck gambler_ruin_check(i64 h, i64 r, uint64_t samples, RandomSource& rng) {
    if (!(0 < h && h < r)) throw std::invalid_argument("need 0 < h < r");
    GamblerCheck out;
    out.closed_form = (double)h / (double)r;

    // Harmonic function of the projected chain: u(0) = 0, u(r) = 1, and
    // u(i) = (u(i-1) + u(i+1) + 4 u(i)) / 6 inside, i.e. a tridiagonal solve.
    {
        const size_t n = (size_t)(r - 1);
        std::vector<double> diag(n, 2.0 / 6.0), rhs(n, 0.0), upper(n, -1.0 / 6.0);
        rhs[n - 1] = 1.0 / 6.0;
        for (size_t i = 1; i < n; ++i) {  // Thomas elimination
            double w = (-1.0 / 6.0) / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        std::vector<double> u(n);
        u[n - 1] = rhs[n - 1] / diag[n - 1];
        for (size_t i = n - 1; i-- > 0;) u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];
        out.exact = u[(size_t)h - 1];
    }

    Accumulator acc;
    for (uint64_t s = 0; s < samples; ++s) {
        i64 pos = h;
        for (;;) {
            int d = rng.next_direction();
            if (d == 0) ++pos;
            else if (d == 1) --pos;
            if (pos <= 0) {
                acc.add(0);
                break;
            }
            if (pos >= r) {
                acc.add(1);
                break;
            }
        }
    }
    out.empirical = EstimateRecord{acc.mean(), acc.stderr_mean(), samples, 0, ""};
    out.measured_constant = out.exact * (double)r / (double)(h + 1);
    return out;
}

SimplePath sample_lerw(int n, const Domain& domain, RandomSource& rng) {
    if (domain.scale() != n) throw std::invalid_argument("domain scale mismatch");
    const LatticePoint origin{0, 0, 0, n};
    if (!domain.contains(origin)) throw std::invalid_argument("domain must contain the origin");
    FastLoopErase le(origin);
    i64 px = 0, py = 0, pz = 0;
    for (uint64_t steps = 0; steps < kDefaultStepCap; ++steps) {
        const auto st = kDirections[rng.next_direction()];
        px += st[0];
        py += st[1];
        pz += st[2];
        le.push(px, py, pz);
        if (!domain.contains_xyz(px, py, pz)) return le.path();
    }
    throw std::runtime_error("walk exceeded the step cap before leaving the domain");
}

// ---------------------------------------------------------------------------
// Length growth and escape

namespace {

struct LengthSlotWriter {
    void merge(const LengthSlotWriter&) {}
};

// One loop-erased length sample at scale n: either the loop-erasure length at
// the first exit of the unit ball, or the first unit-ball exit index along
// the loop-erasure of a walk run to radius 4.
i64 growth_length_sample(int n, LengthVariant variant, RandomSource& rng) {
    const i64 unit2 = (i64)1 << (2 * n);  // (2^n)^2 in lattice units
    const i64 stop2 = variant == LengthVariant::unit_ball ? unit2 : 16 * unit2;
    FastLoopErase le(LatticePoint{0, 0, 0, n});
    i64 px = 0, py = 0, pz = 0;
    for (;;) {
        const auto st = kDirections[rng.next_direction()];
        px += st[0];
        py += st[1];
        pz += st[2];
        le.push(px, py, pz);
        if (px * px + py * py + pz * pz >= stop2) break;
    }
    if (variant == LengthVariant::unit_ball) return (i64)le.len();
    const auto& verts = le.vertices();
    for (size_t k = 0; k < verts.size(); ++k) {
        const auto& v = verts[k];
        if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] >= unit2) return (i64)k;
    }
    throw std::logic_error("loop-erased path never left the unit ball");
}

} // namespace

GrowthFit estimate_length_moments(const std::vector<std::pair<int, uint64_t>>& schedule, LengthVariant variant,
                                  uint64_t seed, int workers, std::vector<double> tail_r) {
    if (schedule.empty()) throw std::invalid_argument("empty schedule");
    for (const auto& [n, cnt] : schedule) {
        if (n < 1 || n > 17) throw std::invalid_argument("scale out of range [1, 17]");
        if (cnt < 2) throw std::invalid_argument("need at least 2 samples per scale");
    }
    if (!std::is_sorted(tail_r.begin(), tail_r.end())) throw std::invalid_argument("tail ratios must be ascending");

    GrowthFit fit;
    fit.seed = seed;
    fit.tail_r = tail_r;
    uint64_t stream_base = 0;
    std::vector<double> xs, ys, se;
    for (const auto& [n, cnt] : schedule) {
        std::vector<i64> lengths((size_t)cnt, 0);
        const uint64_t base = stream_base;
        parallel_fold(cnt, workers, LengthSlotWriter{}, [&, n, base](uint64_t s, LengthSlotWriter&) {
            RandomSource rng(seed, base + s);
            lengths[(size_t)s] = growth_length_sample(n, variant, rng);
        });
        stream_base += cnt;

        Accumulator acc;
        for (i64 v : lengths) acc.add(v);
        const double mean = acc.mean();
        fit.n_values.push_back(n);
        fit.mean_len.push_back(mean);
        fit.mean_stderr.push_back(acc.stderr_mean());
        fit.samples_per_n.push_back(cnt);
        std::vector<double> cov;
        for (double r : tail_r) {
            uint64_t inside = 0;
            for (i64 v : lengths)
                if ((double)v * r >= mean && (double)v <= mean * r) ++inside;
            cov.push_back((double)inside / (double)cnt);
        }
        fit.tail_cov.push_back(std::move(cov));

        xs.push_back((double)n);
        ys.push_back(std::log2(mean));
        se.push_back(acc.stderr_mean() / (mean * std::log(2.0)));
    }

    if (schedule.size() >= 2) {
        LineFit lf = fit_line_weighted(xs, ys, se);
        fit.beta_hat = lf.slope;
        fit.beta_stderr = lf.slope_stderr;
        fit.ci_low = lf.slope - lf.ci_half_width;
        fit.ci_high = lf.slope + lf.ci_half_width;
    }
    return fit;
}

namespace {

struct EscapeState {
    std::vector<Accumulator> per_n;
    void merge(const EscapeState& o) {
        for (size_t i = 0; i < per_n.size(); ++i) per_n[i].merge(o.per_n[i]);
    }
};

} // namespace

EscapeCurve estimate_escape(const std::vector<int>& N_list, uint64_t samples, uint64_t seed, int workers) {
    if (N_list.empty()) throw std::invalid_argument("empty radius list");
    if (!std::is_sorted(N_list.begin(), N_list.end()) || N_list.front() < 1)
        throw std::invalid_argument("radii must be positive and ascending");
    const size_t K = N_list.size();
    if (K > 16) throw std::invalid_argument("at most 16 radii");
    const i64 nmax = N_list.back();
    if (nmax >= ((i64)1 << 19)) throw std::invalid_argument("radius too large");
    std::vector<i64> thresh2(K);
    for (size_t i = 0; i < K; ++i) thresh2[i] = (i64)N_list[i] * N_list[i];

    EscapeState init;
    init.per_n.resize(K);
    EscapeState total = parallel_fold(samples, workers, init, [&](uint64_t s, EscapeState& st) {
        RandomSource rng(seed, s);

        // Second walk first: earliest visit time of every vertex it touches,
        // plus the first time it reaches each radius in the list.
        thread_local std::unordered_map<uint64_t, uint32_t> earliest;
        earliest.clear();
        std::array<uint32_t, 16> t2{};
        {
            i64 px = 0, py = 0, pz = 0;
            uint32_t t = 0;
            size_t ni = 0;
            while (ni < K) {
                const auto d = kDirections[rng.next_direction()];
                px += d[0];
                py += d[1];
                pz += d[2];
                ++t;
                earliest.emplace(pack_local(px, py, pz), t);
                const i64 r2 = px * px + py * py + pz * pz;
                while (ni < K && r2 >= thresh2[ni]) t2[ni++] = t;
            }
        }

        // First walk with online loop erasure; at each radius threshold the
        // current loop-erasure is LE(S1[0, T_N]), scanned against the second
        // walk's visit map.
        FastLoopErase le(LatticePoint{0, 0, 0, 0});
        i64 px = 0, py = 0, pz = 0;
        size_t ni = 0;
        while (ni < K) {
            const auto d = kDirections[rng.next_direction()];
            px += d[0];
            py += d[1];
            pz += d[2];
            le.push(px, py, pz);
            const i64 r2 = px * px + py * py + pz * pz;
            while (ni < K && r2 >= thresh2[ni]) {
                bool hit = false;
                for (const auto& v : le.vertices()) {
                    auto it = earliest.find(pack_local(v[0], v[1], v[2]));
                    if (it != earliest.end() && it->second <= t2[ni]) {
                        hit = true;
                        break;
                    }
                }
                st.per_n[ni].add(hit ? 0 : 1);
                ++ni;
            }
        }
    });

    EscapeCurve out;
    out.N_values = N_list;
    std::vector<double> xs, ys, se;
    for (size_t i = 0; i < K; ++i) {
        const auto& acc = total.per_n[i];
        EstimateRecord rec{acc.mean(), acc.stderr_mean(), samples, seed,
                           params_digest({{"N", (double)N_list[i]}})};
        out.es.push_back(rec);
        if (rec.value > 0 && rec.std_err > 0) {
            xs.push_back(std::log2((double)N_list[i]));
            ys.push_back(std::log2(rec.value));
            se.push_back(rec.std_err / (rec.value * std::log(2.0)));
        }
    }
    if (xs.size() >= 2) {
        LineFit lf = fit_line_weighted(xs, ys, se);
        out.slope = lf.slope;
        out.slope_stderr = lf.slope_stderr;
    }

    // Radius-1 value by direct enumeration of the two first steps.
    int good = 0;
    for (int d1 = 0; d1 < 6; ++d1)
        for (int d2 = 0; d2 < 6; ++d2)
            if (d1 != d2) ++good;
    out.es1_exact = (double)good / 36.0;
    return out;
}

EstimateRecord estimate_hittability(const SimplePath& gamma, const LatticePoint& x, const Dyadic& s_radius,
                                    uint64_t samples, RandomSource& rng) {
    if (samples == 0) throw std::invalid_argument("samples must be positive");
    if (gamma.num_vertices() == 0) throw std::invalid_argument("empty path");
    if (x.n != gamma.n) throw std::invalid_argument("point scale differs from path scale");
    if (s_radius.num <= 0) throw std::invalid_argument("radius must be positive");

    // Squared-distance comparison against the dyadic radius in exact integer
    // arithmetic: |d|^2 >= s^2 iff |d|^2 << 2*max(0,k-n) >= (num << max(0,n-k))^2.
    const int n = x.n;
    const int up = std::max(0, s_radius.k - n);
    const i128 su_num = (i128)s_radius.num << std::max(0, n - s_radius.k);
    const i128 s2 = su_num * su_num;
    auto outside = [&](i64 dx, i64 dy, i64 dz) {
        i128 d2 = (i128)dx * dx + (i128)dy * dy + (i128)dz * dz;
        return (d2 << (2 * up)) >= s2;
    };

    // Walks stay within one lattice step of the open ball, so any path vertex
    // farther than s + 1 (in units, conservatively) can never be met.
    const i128 safe = su_num + ((i128)1 << up);
    bool disjoint = true;
    std::unordered_set<uint64_t> on_path;
    for (size_t i = 0; i < gamma.num_vertices(); ++i) {
        const auto v = gamma.vertex(i);
        const i64 dx = v.x - x.x, dy = v.y - x.y, dz = v.z - x.z;
        if (dx == 0 && dy == 0 && dz == 0)
            return EstimateRecord{0.0, 0.0, samples, 0, params_digest({{"on_path", 1}})};
        i128 d2 = ((i128)dx * dx + (i128)dy * dy + (i128)dz * dz) << (2 * up);
        if (d2 < safe * safe) {
            disjoint = false;
            on_path.insert(pack_local(dx, dy, dz));
        }
    }
    if (disjoint) return EstimateRecord{1.0, 0.0, samples, 0, params_digest({{"disjoint", 1}})};

    Accumulator acc;
    for (uint64_t s = 0; s < samples; ++s) {
        i64 dx = 0, dy = 0, dz = 0;  // offsets from x
        for (;;) {
            const auto st = kDirections[rng.next_direction()];
            dx += st[0];
            dy += st[1];
            dz += st[2];
            if (on_path.count(pack_local(dx, dy, dz))) {
                acc.add(0);
                break;
            }
            if (outside(dx, dy, dz)) {
                acc.add(1);
                break;
            }
        }
    }
    return EstimateRecord{acc.mean(), acc.stderr_mean(), samples, 0, ""};
}

// ---------------------------------------------------------------------------
// Conditional-law validation

PrefixLawCheck check_prefix_law(const Domain& domain, const SimplePath& prefix, uint64_t accepted_target,
                                uint64_t seed) {
    if (!prefix.is_simple()) throw std::invalid_argument("prefix must be a simple path");
    const size_t m = prefix.len();
    if (m == 0) throw std::invalid_argument("prefix needs at least one step");
    const int n = domain.scale();
    if (prefix.n != n) throw std::invalid_argument("prefix scale differs from domain scale");
    const auto p0 = prefix.start();
    if (p0.x != 0 || p0.y != 0 || p0.z != 0) throw std::invalid_argument("prefix must start at the origin");
    for (size_t i = 0; i <= m; ++i)
        if (!domain.contains(prefix.vertex(i))) throw std::invalid_argument("prefix must stay inside the domain");

    PrefixLawCheck out;
    std::map<std::string, std::pair<uint64_t, uint64_t>> counts;

    // Law A: full loop-erased samples filtered on the prefix.
    {
        RandomSource rng(seed, 0);
        while (out.accepted_filtered < accepted_target) {
            SimplePath g = sample_lerw(n, domain, rng);
            ++out.proposals_filtered;
            if (g.len() <= m) continue;
            bool match = true;
            for (size_t i = 0; i < m; ++i)
                if (g.steps[i] != prefix.steps[i]) {
                    match = false;
                    break;
                }
            if (!match) continue;
            std::string key(g.steps.begin() + (ptrdiff_t)m, g.steps.end());
            counts[key].first++;
            ++out.accepted_filtered;
        }
    }

    // Law B: loop-erasure of the walk from the prefix endpoint conditioned to
    // avoid every prefix vertex from time 1 on.
    {
        RandomSource rng(seed, 1);
        std::vector<LatticePoint> avoid;
        for (size_t i = 0; i <= m; ++i) avoid.push_back(prefix.vertex(i));
        const StopRule stop = StopRule::exit_domain(domain);
        while (out.accepted_conditioned < accepted_target) {
            ConditionedWalk cw = sample_conditioned_walk(prefix.last(), stop, avoid, rng);
            if (!cw.ok) throw std::runtime_error("conditioned-walk rejection sampler exhausted its attempts");
            SimplePath cont = erase_loops(cw.path);
            std::string key(cont.steps.begin(), cont.steps.end());
            counts[key].second++;
            ++out.accepted_conditioned;
        }
    }

    std::vector<uint64_t> a, b;
    for (const auto& [key, ab] : counts) {
        a.push_back(ab.first);
        b.push_back(ab.second);
    }
    out.distinct_continuations = counts.size();
    out.chi2 = chi2_homogeneity(a, b);
    return out;
}

} // namespace lerw
