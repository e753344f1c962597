#include "lerw/curve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lerw {

namespace {

constexpr double kBetaMax = 5.0 / 3.0 + 1e-12;

i64 dist2(const std::array<i64, 3>& a, const std::array<i64, 3>& b) {
    const i64 dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

double sq(double v) { return v * v; }

} // namespace

std::array<double, 3> ParametrizedCurve::value_at(double t) const {
    if (verts.empty()) throw std::logic_error("empty curve");
    const double scale = std::pow(2.0, -(double)n);
    double u = t / dt;
    if (u <= 0) u = 0;
    if (u >= (double)len()) u = (double)len();
    size_t i = (size_t)u;
    if (i >= len() && len() > 0) i = len() - 1;
    if (len() == 0) return {(double)verts[0][0] * scale, (double)verts[0][1] * scale, (double)verts[0][2] * scale};
    const double f = u - (double)i;
    std::array<double, 3> out;
    for (int a = 0; a < 3; ++a)
        out[(size_t)a] = ((double)verts[i][(size_t)a] * (1.0 - f) + (double)verts[i + 1][(size_t)a] * f) * scale;
    return out;
}

ParametrizedCurve parametrize(const SimplePath& path, double beta) {
    if (!(beta > 1.0 && beta <= kBetaMax)) throw std::invalid_argument("beta must lie in (1, 5/3]");
    if (path.num_vertices() == 0) throw std::invalid_argument("empty path");
    ParametrizedCurve c;
    c.n = path.n;
    c.beta = beta;
    c.dt = std::pow(2.0, -beta * (double)path.n);
    c.verts = path.verts;
    return c;
}

double rho_distance(const ParametrizedCurve& a, const ParametrizedCurve& b) {
    if (a.verts.empty() || b.verts.empty()) throw std::invalid_argument("empty curve");
    const size_t la = a.len(), lb = b.len();
    if ((la == 0) != (lb == 0))
        throw std::invalid_argument("curves of zero and positive duration are not comparable");
    const double sa = std::pow(2.0, -(double)a.n), sb = std::pow(2.0, -(double)b.n);

    auto point_at = [](const ParametrizedCurve& c, double scale, size_t idx, double frac) {
        std::array<double, 3> p;
        for (int ax = 0; ax < 3; ++ax) {
            double v = (double)c.verts[idx][(size_t)ax];
            if (frac > 0) v += frac * (double)(c.verts[idx + 1][(size_t)ax] - c.verts[idx][(size_t)ax]);
            p[(size_t)ax] = v * scale;
        }
        return p;
    };

    double sup = 0;
    if (la == 0) {
        auto pa = point_at(a, sa, 0, 0), pb = point_at(b, sb, 0, 0);
        sup = std::sqrt(sq(pa[0] - pb[0]) + sq(pa[1] - pb[1]) + sq(pa[2] - pb[2]));
    } else {
        // The reparametrized difference is piecewise linear in s, so the
        // supremum sits at a breakpoint s = i/la or s = j/lb.  Index and
        // fraction on the other curve come from exact integer division.
        auto eval = [&](size_t i, size_t total, const ParametrizedCurve& self, double sself,
                        const ParametrizedCurve& other, double sother, size_t lother) {
            auto ps = point_at(self, sself, i, 0);
            const uint64_t num = (uint64_t)i * lother;
            size_t j = (size_t)(num / total);
            double frac = (double)(num % total) / (double)total;
            if (j >= lother) {
                j = lother;
                frac = 0;
            }
            auto po = point_at(other, sother, j, frac);
            return std::sqrt(sq(ps[0] - po[0]) + sq(ps[1] - po[1]) + sq(ps[2] - po[2]));
        };
        for (size_t i = 0; i <= la; ++i) sup = std::max(sup, eval(i, la, a, sa, b, sb, lb));
        for (size_t j = 0; j <= lb; ++j) sup = std::max(sup, eval(j, lb, b, sb, a, sa, la));
    }
    return std::abs(a.duration() - b.duration()) + sup;
}

namespace {

// Grid-pair supremum with per-gap pruning: once a candidate is known, a pair
// at gap g can only win if its squared lattice distance clears
// (best * (g dt)^h / 2^-n)^2, which is a single integer-vs-double compare.
double grid_sup(const ParametrizedCurve& c, double h, size_t lo, size_t hi, size_t* bi, size_t* bj) {
    const double scale = std::pow(2.0, -(double)c.n);
    double best = 0;
    for (size_t g = hi - lo; g > 0; --g) {
        const double denom = std::pow((double)g * c.dt, h);
        double cutoff = best > 0 ? sq(best * denom / scale) : -1.0;
        for (size_t i = lo; i + g <= hi; ++i) {
            const i64 d2 = dist2(c.verts[i], c.verts[i + g]);
            if ((double)d2 > cutoff) {
                const double val = std::sqrt((double)d2) * scale / denom;
                if (val > best) {
                    best = val;
                    *bi = i;
                    *bj = i + g;
                    cutoff = sq(best * denom / scale);
                }
            }
        }
    }
    return best;
}

} // namespace

double modulus_statistic(const ParametrizedCurve& c, double h, size_t i_lo, size_t i_hi,
                         ModulusWitness* witness) {
    if (!(h > 0)) throw std::invalid_argument("exponent must be positive");
    if (i_hi > c.len() || i_lo > i_hi) throw std::invalid_argument("bad index window");
    size_t bi = i_lo, bj = i_lo;
    const double best = grid_sup(c, h, i_lo, i_hi, &bi, &bj);
    if (witness) *witness = ModulusWitness{(double)bi * c.dt, (double)bj * c.dt, best};
    return best;
}

double modulus_statistic_to(const ParametrizedCurve& c, double h, size_t i_lo, double t_hi,
                            ModulusWitness* witness) {
    if (!(h > 0)) throw std::invalid_argument("exponent must be positive");
    const double t_lo = (double)i_lo * c.dt;
    if (i_lo > c.len() || t_hi < t_lo) throw std::invalid_argument("bad time window");
    if (t_hi > c.duration() * (1 + 1e-12) + c.dt * 1e-9) throw std::invalid_argument("window end beyond curve");
    size_t j = std::min(c.len(), (size_t)(t_hi / c.dt));
    size_t bi = i_lo, bj = i_lo;
    double best = grid_sup(c, h, i_lo, j, &bi, &bj);
    ModulusWitness w{(double)bi * c.dt, (double)bj * c.dt, best};

    const double scale = std::pow(2.0, -(double)c.n);
    const auto pe = c.value_at(t_hi);
    for (size_t i = i_lo; i <= j; ++i) {
        const double gap = t_hi - (double)i * c.dt;
        if (gap <= 0) continue;
        const double dx = pe[0] - (double)c.verts[i][0] * scale;
        const double dy = pe[1] - (double)c.verts[i][1] * scale;
        const double dz = pe[2] - (double)c.verts[i][2] * scale;
        const double val = std::sqrt(dx * dx + dy * dy + dz * dz) / std::pow(gap, h);
        if (val > best) {
            best = val;
            w = ModulusWitness{(double)i * c.dt, t_hi, val};
        }
    }
    w.value = best;
    if (witness) *witness = w;
    return best;
}

TauSequence compute_tau_sequence(const SimplePath& path, double beta, double delta, double eps) {
    if (!(beta > 1.0 && beta <= kBetaMax)) throw std::invalid_argument("beta must lie in (1, 5/3]");
    if (!(delta > 0 && delta < 0.1) || !(eps > 0 && eps < 0.1))
        throw std::invalid_argument("delta and eps must lie in (0, 1/10)");
    if (path.num_vertices() == 0) throw std::invalid_argument("empty path");

    TauSequence out;
    const double thr = std::pow(delta, 1.0 / beta - eps / 100.0);
    const long double t2 = (long double)thr * thr * std::pow(2.0L, 2.0L * path.n);
    out.threshold_sq = (i64)std::ceil((double)t2);
    out.delta_warning = !(std::pow(delta, -eps / 2.0) > 100.0);

    out.taus.push_back(0);
    size_t mark = 0;
    for (size_t jv = 1; jv < path.num_vertices(); ++jv) {
        if (dist2(path.verts[jv], path.verts[mark]) >= out.threshold_sq) {
            out.taus.push_back(jv);
            mark = jv;
        }
    }
    out.N = out.taus.size() - 1;
    return out;
}

std::vector<AnnulusWindow> modulus_per_annulus(const ParametrizedCurve& c, const AnnulusScanParams& params) {
    if (params.m0 < 1 || params.m < 1 || params.m1 < 0) throw std::invalid_argument("bad scan parameters");
    if (!(params.cstar > 0)) throw std::invalid_argument("cstar must be positive");
    // Shell spacing must dominate the window displacement, otherwise the
    // windows are not nested between consecutive shells.
    if (!(std::pow(2.0, -params.m1) > 200.0 * params.m0 * std::pow(2.0, -params.m)))
        throw std::invalid_argument("shell spacing too small for the window displacement");
    if (c.verts.empty()) throw std::invalid_argument("empty curve");

    const int n = c.n;
    const double h = 1.0 / c.beta;
    const double threshold = params.cstar * std::pow((double)params.m0, 1.0 - h);
    const double w_dist = 150.0 * params.m0 * std::pow(2.0, -params.m);  // rescaled units
    const double w_units = w_dist * std::pow(2.0, (double)n);
    const double w_units2 = w_units * w_units;
    const int q1 = (int)(((i64)1 << (params.m1 + 1)) / 3);

    // First vertex index at sup norm >= l * 2^(n - m1), exact via cross
    // multiplication; one sweep finds every shell in order.
    std::vector<size_t> v_index;
    {
        int l = 1;
        for (size_t t = 0; t < c.verts.size() && l <= q1; ++t) {
            const auto& v = c.verts[t];
            const i128 sup = (i128)std::max({std::llabs(v[0]), std::llabs(v[1]), std::llabs(v[2])});
            while (l <= q1 && (sup << params.m1) >= ((i128)l << n)) {
                v_index.push_back(t);
                ++l;
            }
        }
    }

    std::vector<AnnulusWindow> out;
    for (size_t li = 0; li < v_index.size(); ++li) {
        AnnulusWindow win;
        win.l = (int)li + 1;
        win.v_index = v_index[li];
        win.threshold = threshold;
        const auto& base = c.verts[win.v_index];
        for (size_t u = win.v_index + 1; u < c.verts.size(); ++u) {
            if ((double)dist2(c.verts[u], base) >= w_units2) {
                // The crossing happens inside segment (u-1, u]; the step has
                // unit length, so the quadratic in the segment parameter is
                // monic: s^2 + 2 (A.D) s + |A|^2 - w^2 = 0.
                const auto& p = c.verts[u - 1];
                const double ax = (double)(p[0] - base[0]), ay = (double)(p[1] - base[1]),
                             az = (double)(p[2] - base[2]);
                const double dxs = (double)(c.verts[u][0] - p[0]), dys = (double)(c.verts[u][1] - p[1]),
                             dzs = (double)(c.verts[u][2] - p[2]);
                const double ad = ax * dxs + ay * dys + az * dzs;
                const double a2 = ax * ax + ay * ay + az * az;
                double disc = ad * ad - (a2 - w_units2);
                if (disc < 0) disc = 0;
                double s = -ad + std::sqrt(disc);
                s = std::clamp(s, 0.0, 1.0);
                win.w_time = ((double)(u - 1) + s) * c.dt;
                win.has_w = true;
                break;
            }
        }
        if (win.has_w) {
            if (li + 1 < v_index.size() && win.w_time >= (double)v_index[li + 1] * c.dt)
                throw std::logic_error("shell windows overlap; spacing precondition violated");
            win.modulus = modulus_statistic_to(c, h, win.v_index, win.w_time);
            win.ok = win.modulus < win.threshold;
        }
        out.push_back(win);
    }
    return out;
}

} // namespace lerw
