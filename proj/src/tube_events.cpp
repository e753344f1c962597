#include "lerw/tube_events.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "lerw/curve.hpp"
#include "lerw/rng.hpp"
#include "lerw/stats.hpp"
#include "lerw/walk.hpp"

namespace lerw {

namespace {

constexpr double kBetaMax = 5.0 / 3.0 + 1e-12;

void check_event_params(double beta, double cstar) {
    if (!(beta > 1.0 && beta <= kBetaMax)) throw std::invalid_argument("beta must lie in (1, 5/3]");
    if (!(cstar > 0)) throw std::invalid_argument("segment length constant must be positive");
}

// The value the curve modulus statistic assigns to the pair (0, t); keeping
// the expression identical guarantees a supremum over a window containing
// that pair can never fall below it.
double crossing_ratio(int n, double beta, ptrdiff_t t, i64 d2) {
    const double scale = std::pow(2.0, -(double)n);
    const double dt = std::pow(2.0, -beta * (double)n);
    return std::sqrt((double)d2) * scale / std::pow((double)t * dt, 1.0 / beta);
}

TubeStageFlag eval_cut(const LatticePath& walk, const TubePartition& tube, int i) {
    try {
        auto cuts = nice_cut_times(walk, tube, i);
        if (!cuts.empty()) return {true, 0, (ptrdiff_t)cuts[0]};
    } catch (const std::exception&) {
        // a missing plane-hit time means no index can qualify
    }
    return {false, 1, -1};
}

// Shared by verify_length_decomposition and the batch runner so both check
// the identical inequality.  hit[l] must hold the walk's first meeting time
// of H(a_l) for l = 1..i+1.
StageDecomposition stage_decomposition(const LatticePath& walk, const TubePartition& tube,
                                       const std::vector<ptrdiff_t>& hit, int i) {
    StageDecomposition d;
    d.i = i;
    const SimplePath xi = erase_loops(walk.segment(0, (size_t)hit[(size_t)i + 1]));
    d.xi_len = xi.len();
    d.xi_prime_len = erase_loops(walk.segment(0, (size_t)hit[1])).len();
    for (int l = 1; l <= i; ++l)
        d.xi_prime_len += erase_loops(walk.segment((size_t)hit[(size_t)l], (size_t)hit[(size_t)l + 1])).len();

    const i64 tm = 1LL << (tube.n - tube.m);
    const i64 q = 1LL << (tube.n - tube.m - tube.m0);
    d.overlap.assign((size_t)i, 0);
    uint64_t total = 0;
    for (int l = 1; l <= i; ++l) {
        const i64 axl = (2LL * l - 1) * tm;
        uint64_t c = 0;
        for (const auto& v : xi.verts)
            if (v[0] > axl - q && v[0] <= axl + q && v[1] >= -tm && v[1] <= tm && v[2] >= -tm && v[2] <= tm)
                ++c;
        d.overlap[(size_t)l - 1] = c;
        total += c;
    }
    d.ok = d.xi_len <= d.xi_prime_len + total;
    return d;
}

LatticePath path_from_codes(int n, const std::vector<uint8_t>& codes, size_t count) {
    LatticePath p(LatticePoint{0, 0, 0, n});
    p.verts.reserve(count + 1);
    p.steps.reserve(count);
    for (size_t k = 0; k < count; ++k) p.push(codes[k]);
    return p;
}

} // namespace

int TubeEventReport::max_fg_stage() const {
    int best = -1;
    for (size_t i = 0; i < f.size() && i < g.size(); ++i)
        if (f[i] && g[i]) best = (int)i;
    return best;
}

TubeEventReport detect_tube_events(const LatticePath& walk, const TubePartition& tube, double cstar,
                                   double beta) {
    check_event_params(beta, cstar);
    if (walk.empty_path()) throw std::invalid_argument("tube events: empty walk");
    if (walk.n != tube.n) throw std::invalid_argument("tube events: walk and tube scales differ");
    if (walk.verts[0] != std::array<i64, 3>{0, 0, 0})
        throw std::invalid_argument("tube events: walk must start at the origin");
    if (tube.n < tube.m + tube.m0 + 1)
        throw std::invalid_argument("tube events: cut windows need q/2 on the lattice (n >= m + m0 + 1)");

    const int m0 = tube.m0;
    const int top = 2 * m0 + 1;
    const i64 tm = 1LL << (tube.n - tube.m);

    TubeEventReport r;
    r.m = tube.m;
    r.m0 = m0;
    r.n = tube.n;
    r.beta = beta;
    r.cstar = cstar;
    r.len_bound = cstar * std::pow(2.0, beta * (double)(tube.n - tube.m));

    const i64 rex = 40LL * m0 * tm;
    const i64 rex2 = rex * rex;
    for (size_t k = 0; k < walk.num_vertices(); ++k) {
        const auto& v = walk.verts[k];
        if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] >= rex2) {
            r.exit_time = (ptrdiff_t)k;
            break;
        }
    }
    if (r.exit_time < 0) throw std::invalid_argument("tube events: walk never reaches the exit radius");

    r.hit_time.assign((size_t)top + 1, -1);
    for (int i = 1; i <= top; ++i) {
        auto t = plane_hit_time(walk, tube, tube.a[(size_t)i]);
        if (t) r.hit_time[(size_t)i] = (ptrdiff_t)*t;
    }

    r.advance.assign((size_t)(2 * m0 + 1), TubeStageFlag{});
    {
        TubeStageFlag& s = r.advance[0];
        const ptrdiff_t t1 = r.hit_time[1];
        if (t1 < 0) {
            s = {false, 1, -1};
        } else if (!tube.face(tube.a[1]).contains(walk.vertex((size_t)t1))) {
            s = {false, 2, t1};
        } else {
            const Domain cube0 = tube.cube(0);
            ptrdiff_t bad = -1;
            for (ptrdiff_t k = 0; k <= t1; ++k)
                if (!cube0.contains(walk.vertex((size_t)k))) {
                    bad = k;
                    break;
                }
            if (bad >= 0) {
                s = {false, 3, bad};
            } else {
                const Dyadic aq = tube.a[1] - tube.q;
                const Domain back = tube.plane_piece(aq - tube.q);
                const auto tq = plane_hit_time(walk, tube, aq);
                ptrdiff_t badw = -1;
                if (tq && (ptrdiff_t)*tq <= t1)
                    for (ptrdiff_t k = (ptrdiff_t)*tq; k <= t1; ++k)
                        if (back.contains(walk.vertex((size_t)k))) {
                            badw = k;
                            break;
                        }
                s = badw >= 0 ? TubeStageFlag{false, 4, badw} : TubeStageFlag{true, 0, t1};
            }
        }
    }
    for (int i = 1; i <= 2 * m0; ++i) {
        TubeStageFlag& s = r.advance[(size_t)i];
        const ptrdiff_t ti = r.hit_time[(size_t)i];
        const ptrdiff_t ti1 = r.hit_time[(size_t)i + 1];
        if (ti < 0 || ti1 < 0 || ti >= ti1) {
            s = {false, 1, ti1};
            continue;
        }
        if (!tube.face(tube.a[(size_t)i + 1]).contains(walk.vertex((size_t)ti1))) {
            s = {false, 2, ti1};
            continue;
        }
        const Domain slab = tube.slab(tube.a[(size_t)i] - tube.q, true, tube.a[(size_t)i + 1], false);
        ptrdiff_t bad = -1;
        for (ptrdiff_t k = ti; k <= ti1; ++k)
            if (!slab.contains(walk.vertex((size_t)k))) {
                bad = k;
                break;
            }
        if (bad >= 0) {
            s = {false, 3, bad};
            continue;
        }
        const Dyadic wq = tube.a[(size_t)i + 1] - tube.q;
        const Domain win = tube.slab(wq - tube.q, false, tube.a[(size_t)i + 1], false);
        const auto tw = plane_hit_time(walk, tube, wq);
        ptrdiff_t badw = -1;
        if (tw && (ptrdiff_t)*tw <= ti1)
            for (ptrdiff_t k = (ptrdiff_t)*tw; k <= ti1; ++k)
                if (!win.contains(walk.vertex((size_t)k))) {
                    badw = k;
                    break;
                }
        s = badw >= 0 ? TubeStageFlag{false, 4, badw} : TubeStageFlag{true, 0, ti1};
    }

    r.f.assign((size_t)(2 * m0 + 1), 0);
    {
        bool acc = true;
        for (int i = 0; i <= 2 * m0; ++i) {
            acc = acc && r.advance[(size_t)i].ok;
            r.f[(size_t)i] = acc ? 1 : 0;
        }
    }

    r.cut.assign((size_t)(2 * m0), TubeStageFlag{});
    for (int i = 1; i <= 2 * m0; ++i) r.cut[(size_t)i - 1] = eval_cut(walk, tube, i);
    r.g.assign((size_t)(2 * m0 + 1), 0);
    {
        bool acc = true;
        r.g[0] = 1;
        for (int i = 1; i <= 2 * m0; ++i) {
            acc = acc && r.cut[(size_t)i - 1].ok;
            r.g[(size_t)i] = acc ? 1 : 0;
        }
    }

    r.short_seg.assign((size_t)(2 * m0 + 1), TubeStageFlag{});
    r.lambda.assign((size_t)(2 * m0), SimplePath{});
    r.seg_len.assign((size_t)(2 * m0 + 1), 0);
    if (r.hit_time[1] >= 0) {
        r.xi0 = erase_loops(walk.segment(0, (size_t)r.hit_time[1]));
        r.seg_len[0] = r.xi0.len();
        const auto L = (ptrdiff_t)r.xi0.len();
        r.short_seg[0] =
            (double)L <= r.len_bound ? TubeStageFlag{true, 0, L} : TubeStageFlag{false, 2, L};
    } else {
        r.short_seg[0] = {false, 1, -1};
    }
    for (int i = 1; i <= 2 * m0; ++i) {
        const ptrdiff_t ti = r.hit_time[(size_t)i];
        const ptrdiff_t ti1 = r.hit_time[(size_t)i + 1];
        if (ti < 0 || ti1 < 0 || ti >= ti1) {
            r.short_seg[(size_t)i] = {false, 1, -1};
            continue;
        }
        r.lambda[(size_t)i - 1] = erase_loops(walk.segment((size_t)ti, (size_t)ti1));
        const auto L = (ptrdiff_t)r.lambda[(size_t)i - 1].len();
        r.seg_len[(size_t)i] = (size_t)L;
        r.short_seg[(size_t)i] =
            (double)L <= r.len_bound ? TubeStageFlag{true, 0, L} : TubeStageFlag{false, 2, L};
    }
    r.j.assign((size_t)(2 * m0 + 1), 0);
    {
        bool acc = true;
        for (int i = 0; i <= 2 * m0; ++i) {
            acc = acc && r.short_seg[(size_t)i].ok;
            r.j[(size_t)i] = acc ? 1 : 0;
        }
    }

    const SimplePath gamma = erase_loops(walk.segment(0, (size_t)r.exit_time));
    const double l_thr = std::pow(2.0, beta * (double)(tube.n - tube.m));
    r.cuboid_count.assign((size_t)m0, 0);
    r.l_ok = true;
    for (int l = 1; l <= m0; ++l) {
        const Domain hw = tube.thin_cuboid(LatticePoint{(2LL * l - 1) * tm, 0, 0, tube.n});
        uint64_t c = 0;
        for (size_t k = 0; k < gamma.num_vertices(); ++k)
            if (hw.contains(gamma.vertex(k))) ++c;
        r.cuboid_count[(size_t)l - 1] = c;
        if ((double)c > l_thr) r.l_ok = false;
    }

    {
        const i64 xu = 8LL * m0 * tm;
        const i64 bmid = (3LL * m0 - 1) * tm;
        const i64 bmid2 = bmid * bmid;
        ptrdiff_t ball_bad = -1;
        const ptrdiff_t tlast = r.hit_time[(size_t)top];
        if (tlast >= 0)
            for (ptrdiff_t k = tlast; k <= r.exit_time; ++k) {
                const auto& v = walk.verts[(size_t)k];
                if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] < bmid2) {
                    ball_bad = k;
                    break;
                }
            }
        if (walk.verts[(size_t)r.exit_time][0] < xu) r.u = {false, 1, r.exit_time};
        else if (ball_bad >= 0) r.u = {false, 2, ball_bad};
        else r.u = {true, 0, r.exit_time};
    }

    {
        const auto tg = plane_hit_time(gamma, tube, tube.a[(size_t)m0]);
        if (tg) {
            r.crossing_time = (ptrdiff_t)*tg;
            const auto& v = gamma.verts[(size_t)*tg];
            const i64 d2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            r.crossing_dist = std::sqrt((double)d2) * std::pow(2.0, -(double)tube.n);
            if (r.crossing_time > 0) r.ratio = crossing_ratio(tube.n, beta, r.crossing_time, d2);
        }
    }

    r.all = r.f[(size_t)(2 * m0)] && r.g[(size_t)(2 * m0)] && r.j[(size_t)(2 * m0)] && r.u.ok && r.l_ok;
    return r;
}

LengthDecomposition verify_length_decomposition(const LatticePath& walk, const TubePartition& tube,
                                                const TubeEventReport& report) {
    if (walk.empty_path()) throw std::invalid_argument("length check: empty walk");
    if (walk.n != tube.n) throw std::invalid_argument("length check: walk and tube scales differ");
    if (report.m != tube.m || report.m0 != tube.m0 || report.n != tube.n)
        throw std::invalid_argument("length check: report belongs to a different tube");

    const int m0 = tube.m0;
    std::vector<int> flagged;
    for (int i = 0; i <= 2 * m0; ++i)
        if ((size_t)i < report.f.size() && (size_t)i < report.g.size() && report.f[(size_t)i] &&
            report.g[(size_t)i])
            flagged.push_back(i);
    if (flagged.empty()) throw std::invalid_argument("length check: report establishes no joint stage");

    // plane-hit times recomputed from the walk, so the check does not trust
    // the report's bookkeeping
    std::vector<ptrdiff_t> hit((size_t)(2 * m0 + 2), -1);
    for (int i = 1; i <= 2 * m0 + 1; ++i) {
        auto t = plane_hit_time(walk, tube, tube.a[(size_t)i]);
        if (t) hit[(size_t)i] = (ptrdiff_t)*t;
    }

    LengthDecomposition out;
    out.ok = true;
    for (int i : flagged) {
        for (int l = 1; l <= i + 1; ++l)
            if (hit[(size_t)l] < 0)
                throw std::invalid_argument("length check: flagged stage not established by this walk");
        if (i == 0) {
            StageDecomposition d;
            d.i = 0;
            d.xi_len = d.xi_prime_len = erase_loops(walk.segment(0, (size_t)hit[1])).len();
            d.ok = true;
            out.stages.push_back(std::move(d));
            continue;
        }
        out.stages.push_back(stage_decomposition(walk, tube, hit, i));
        if (!out.stages.back().ok) out.ok = false;
    }
    return out;
}

namespace {

struct TubeBatchState {
    TubeBatchResult r;

    void merge(TubeBatchState& o) {
        for (size_t i = 0; i < r.f_count.size(); ++i) r.f_count[i] += o.r.f_count[i];
        for (size_t i = 0; i < r.fg_count.size(); ++i) r.fg_count[i] += o.r.fg_count[i];
        r.full_f += o.r.full_f;
        r.full_fg += o.r.full_fg;
        r.full_fgj += o.r.full_fgj;
        r.u_count += o.r.u_count;
        r.l_count += o.r.l_count;
        r.am_count += o.r.am_count;
        r.capped += o.r.capped;
        r.decomposition_checked += o.r.decomposition_checked;
        r.decomposition_violations += o.r.decomposition_violations;
        r.modulus_checked += o.r.modulus_checked;
        r.modulus_violations += o.r.modulus_violations;
        for (auto& d : o.r.details) r.details.push_back(std::move(d));
        r.crossing_times.insert(r.crossing_times.end(), o.r.crossing_times.begin(), o.r.crossing_times.end());
        r.ratios.insert(r.ratios.end(), o.r.ratios.begin(), o.r.ratios.end());
    }
};

} // namespace

TubeBatchResult run_tube_batch(int m, int m0, int n, double beta, double cstar, uint64_t samples,
                               uint64_t seed, int workers) {
    check_event_params(beta, cstar);
    if (n < m + m0 + 2) throw std::invalid_argument("tube batch: need n >= m + m0 + 2");
    const TubePartition tube = build_tube_partition(m, m0, n);
    const i64 tm = 1LL << (n - m);
    if (40LL * m0 * tm >= (1LL << 20))
        throw std::invalid_argument("tube batch: exit radius exceeds the loop-erasure coordinate range");

    const int top = 2 * m0 + 1;
    const i64 q = 1LL << (n - m - m0);
    const i64 half = tm / 2;
    std::vector<i64> ax((size_t)top + 1);
    for (int i = 0; i <= top; ++i) ax[(size_t)i] = (2LL * i - 1) * tm;
    const i64 rex = 40LL * m0 * tm;
    const i64 rex2 = rex * rex;
    const i64 xu = 8LL * m0 * tm;
    const i64 bmid = (3LL * m0 - 1) * tm;
    const i64 bmid2 = bmid * bmid;
    const double len_bound = cstar * std::pow(2.0, beta * (double)(n - m));
    const double l_thr = std::pow(2.0, beta * (double)(n - m));

    TubeBatchState init;
    init.r.f_count.assign((size_t)(2 * m0 + 1), 0);
    init.r.fg_count.assign((size_t)(2 * m0 + 1), 0);

    auto item = [&](uint64_t idx, TubeBatchState& st) {
        thread_local std::vector<uint8_t> codes;
        codes.clear();
        RandomSource rs(seed, idx);
        i64 x = 0, y = 0, z = 0;
        uint64_t step = 0;
        bool capped = false;
        int f_stages = 0;
        std::vector<ptrdiff_t> t((size_t)top + 1, -1);

        auto move_once = [&]() {
            const int d = rs.next_direction();
            codes.push_back((uint8_t)d);
            x += kDirections[(size_t)d][0];
            y += kDirections[(size_t)d][1];
            z += kDirections[(size_t)d][2];
            ++step;
        };

        // First stage: stay inside the centered cube until H(a_1) is met in
        // its face; abort at the first decided violation.
        {
            const i64 hi = ax[1];
            bool tq_seen = false;
            for (;;) {
                if (step >= kDefaultStepCap) {
                    capped = true;
                    break;
                }
                move_once();
                if (x < -tm || x > tm || y < -tm || y > tm || z < -tm || z > tm) break;
                if (x == hi) {
                    if (y >= -half && y <= half && z >= -half && z <= half) {
                        t[1] = (ptrdiff_t)step;
                        f_stages = 1;
                    }
                    break;
                }
                if (x == hi - q) tq_seen = true;
                else if (tq_seen && x == hi - 2 * q) break;  // backtracking clause violated
            }
        }

        // Later stages: slab-confined advance between consecutive planes.
        for (int i = 1; i <= 2 * m0 && f_stages == i && !capped; ++i) {
            const i64 lo = ax[(size_t)i] - q;
            const i64 hi = ax[(size_t)i + 1];
            bool win_seen = false;
            for (;;) {
                if (step >= kDefaultStepCap) {
                    capped = true;
                    break;
                }
                move_once();
                if (x <= lo || y < -tm || y > tm || z < -tm || z > tm) break;
                if (x == hi) {
                    if (y >= -half && y <= half && z >= -half && z <= half) {
                        t[(size_t)i + 1] = (ptrdiff_t)step;
                        f_stages = i + 1;
                    }
                    break;
                }
                if (x == hi - q) win_seen = true;
                else if (win_seen && x < hi - 2 * q) break;  // left the closed approach window
            }
        }

        const bool full = f_stages == 2 * m0 + 1;

        bool u_ok = false, l_ok = false, am = false;
        bool g_all = false, j_all = false;
        bool have_exit = false;
        ptrdiff_t crossing = -1;
        i64 cross_d2 = 0;
        double ratio = 0, modulus = 0;
        bool modulus_ok = true;

        thread_local FastLoopErase le(LatticePoint{0, 0, 0, 0});
        if (full && !capped) {
            // carry the surviving walk to the exit radius, keeping only its
            // loop-erasure from here on
            le.reset(LatticePoint{0, 0, 0, n});
            {
                i64 px = 0, py = 0, pz = 0;
                for (const uint8_t c : codes) {
                    px += kDirections[c][0];
                    py += kDirections[c][1];
                    pz += kDirections[c][2];
                    le.push(px, py, pz);
                }
            }
            bool ball_bad = false;
            for (;;) {
                const i64 r2 = x * x + y * y + z * z;
                if (r2 >= rex2) {
                    have_exit = true;
                    break;
                }
                if (r2 < bmid2) ball_bad = true;
                if (step >= kDefaultStepCap) {
                    capped = true;
                    break;
                }
                const int d = rs.next_direction();
                ++step;
                x += kDirections[(size_t)d][0];
                y += kDirections[(size_t)d][1];
                z += kDirections[(size_t)d][2];
                le.push(x, y, z);
            }
            if (have_exit) {
                u_ok = !ball_bad && x >= xu;
                const auto& gv = le.vertices();
                l_ok = true;
                for (int l = 1; l <= m0; ++l) {
                    const i64 axl = ax[(size_t)l];
                    uint64_t c = 0;
                    for (const auto& v : gv)
                        if (v[0] >= axl - q && v[0] <= axl + q && v[1] >= -tm && v[1] <= tm &&
                            v[2] >= -tm && v[2] <= tm)
                            ++c;
                    if ((double)c > l_thr) l_ok = false;
                }
                for (size_t k = 0; k < gv.size(); ++k) {
                    const auto& v = gv[k];
                    if (v[0] == ax[(size_t)m0] && v[1] >= -tm && v[1] <= tm && v[2] >= -tm && v[2] <= tm) {
                        crossing = (ptrdiff_t)k;
                        cross_d2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                        break;
                    }
                }
            }
        }

        // Cut structure, segment lengths, and the exact length bookkeeping
        // need the buffered prefix; only samples past the second stage have
        // anything to examine.
        int fg_stages = f_stages >= 1 ? 1 : 0;
        bool dec_ok = true;
        std::vector<size_t> lens;
        if (f_stages >= 2) {
            const LatticePath prefix = path_from_codes(n, codes, (size_t)t[(size_t)f_stages]);
            int g_lead = 0;
            bool lead = true;
            g_all = true;
            for (int k = 1; k <= f_stages - 1; ++k) {
                const bool ok = eval_cut(prefix, tube, k).ok;
                if (!ok) g_all = false;
                if (lead && ok) ++g_lead;
                else lead = false;
            }
            fg_stages = 1 + g_lead;

            lens.resize((size_t)f_stages);
            lens[0] = erase_loops(prefix.segment(0, (size_t)t[1])).len();
            bool all_short = (double)lens[0] <= len_bound;
            for (int k = 1; k <= f_stages - 1; ++k) {
                lens[(size_t)k] =
                    erase_loops(prefix.segment((size_t)t[(size_t)k], (size_t)t[(size_t)k + 1])).len();
                if ((double)lens[(size_t)k] > len_bound) all_short = false;
            }
            j_all = all_short;

            for (int i = 1; i <= fg_stages - 1; ++i) {
                const StageDecomposition d = stage_decomposition(prefix, tube, t, i);
                ++st.r.decomposition_checked;
                if (!d.ok) {
                    ++st.r.decomposition_violations;
                    dec_ok = false;
                }
            }
        }

        if (full && !capped && have_exit) {
            am = g_all && j_all && u_ok && l_ok;
            if (am && crossing > 0) {
                ratio = crossing_ratio(n, beta, crossing, cross_d2);
                const ParametrizedCurve c = parametrize(le.path(), beta);
                modulus = modulus_statistic(c, 1.0 / beta, 0, (size_t)crossing);
                modulus_ok = modulus >= ratio;
                ++st.r.modulus_checked;
                if (!modulus_ok) ++st.r.modulus_violations;
                st.r.crossing_times.push_back((double)crossing);
                st.r.ratios.push_back(ratio);
            }
        }

        for (int i = 0; i < f_stages; ++i) ++st.r.f_count[(size_t)i];
        for (int i = 0; i < fg_stages; ++i) ++st.r.fg_count[(size_t)i];
        if (full) {
            ++st.r.full_f;
            if (g_all) ++st.r.full_fg;
            if (g_all && j_all) ++st.r.full_fgj;
            if (!capped && have_exit) {
                if (u_ok) ++st.r.u_count;
                if (l_ok) ++st.r.l_count;
                if (am) ++st.r.am_count;
            }
        }
        if (capped) ++st.r.capped;

        if (f_stages >= 2) {
            TubeSampleDetail d;
            d.sample = idx;
            d.f_stages = f_stages;
            d.fg_stages = fg_stages;
            d.full = full;
            d.g_all = g_all;
            d.j_all = j_all;
            d.l_ok = l_ok;
            d.u_ok = u_ok;
            d.am = am;
            d.decomposition_ok = dec_ok;
            d.seg_len = std::move(lens);
            d.crossing_time = crossing;
            d.ratio = ratio;
            d.modulus = modulus;
            d.modulus_ok = modulus_ok;
            st.r.details.push_back(std::move(d));
        }
    };

    TubeBatchState folded = parallel_fold(samples, workers, std::move(init), item);
    folded.r.m = m;
    folded.r.m0 = m0;
    folded.r.n = n;
    folded.r.beta = beta;
    folded.r.cstar = cstar;
    folded.r.samples = samples;
    return std::move(folded.r);
}

} // namespace lerw
