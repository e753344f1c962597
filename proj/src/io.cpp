#include "lerw/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "lerw/curve.hpp"
#include "lerw/domain.hpp"
#include "lerw/estimators.hpp"
#include "lerw/events.hpp"
#include "lerw/loop_erase.hpp"
#include "lerw/metrics.hpp"
#include "lerw/rng.hpp"
#include "lerw/stats.hpp"
#include "lerw/tree.hpp"
#include "lerw/tube.hpp"
#include "lerw/tube_events.hpp"
#include "lerw/v_events.hpp"
#include "lerw/walk.hpp"

namespace lerw {

namespace {

using nlohmann::json;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Parameter schema and typed access

struct Schema {
    std::vector<std::string> required;
    std::vector<std::string> optional;
};

const std::map<std::string, Schema>& schemas() {
    static const std::map<std::string, Schema> table = {
        {"sample", {{"n"}, {"samples", "r", "kind"}}},
        {"ust", {{"n", "r"}, {"samples"}}},
        {"beta", {{}, {"n", "samples", "variant"}}},
        {"escape", {{}, {"n", "samples"}}},
        {"quasiloops", {{"n"}, {"samples", "eps"}}},
        {"hittability", {{"n"}, {"samples", "r"}}},
        {"events", {{"n", "delta"}, {"samples", "eps", "r", "beta", "mc_samples"}}},
        {"tube", {{"m", "m0", "n"}, {"samples", "beta", "cstar"}}},
        {"vevents", {{"m", "m0", "n"}, {"samples", "r", "beta", "chat", "attempts"}}},
        {"modulus", {{"n"}, {"samples", "beta"}}},
        {"annulus-scan", {{"m", "m0", "m1", "n"}, {"samples", "beta", "cstar"}}},
        {"oracle", {{}, {"r", "steps", "extrapolate"}}},
        {"selftest", {{}, {"samples"}}},
    };
    return table;
}

void validate_schema(const ExperimentManifest& man) {
    auto it = schemas().find(man.subcommand);
    if (it == schemas().end())
        throw std::invalid_argument("unknown subcommand '" + man.subcommand + "'");
    const Schema& s = it->second;
    for (const auto& key : s.required)
        if (!man.params.count(key))
            throw std::invalid_argument("missing required --" + key + " for subcommand '" + man.subcommand + "'");
    for (const auto& [key, value] : man.params) {
        (void)value;
        bool known = false;
        for (const auto& k : s.required) known = known || k == key;
        for (const auto& k : s.optional) known = known || k == key;
        if (!known)
            throw std::invalid_argument("unknown parameter '" + key + "' for subcommand '" + man.subcommand + "'");
    }
    if (man.format != "jsonl" && man.format != "csv")
        throw std::invalid_argument("format must be jsonl or csv");
    if (man.workers < 1)
        throw std::invalid_argument("workers must be at least 1");
}

struct ParamReader {
    const ExperimentManifest& man;

    const std::string* find(const std::string& key) const {
        auto it = man.params.find(key);
        return it == man.params.end() ? nullptr : &it->second;
    }
    [[noreturn]] void bad(const std::string& key, const std::string& value) const {
        throw std::invalid_argument("parameter '" + key + "' is not a valid number: '" + value + "'");
    }
    double dbl(const std::string& key, double def) const {
        const std::string* v = find(key);
        if (!v) return def;
        try {
            size_t pos = 0;
            double x = std::stod(*v, &pos);
            if (pos != v->size() || !std::isfinite(x)) bad(key, *v);
            return x;
        } catch (const std::invalid_argument&) {
            bad(key, *v);
        } catch (const std::out_of_range&) {
            bad(key, *v);
        }
    }
    double dbl_req(const std::string& key) const { return dbl(key, 0.0); }  // presence enforced by schema
    int64_t integer(const std::string& key, int64_t def) const {
        const std::string* v = find(key);
        if (!v) return def;
        try {
            size_t pos = 0;
            long long x = std::stoll(*v, &pos);
            if (pos != v->size()) bad(key, *v);
            return x;
        } catch (const std::invalid_argument&) {
            bad(key, *v);
        } catch (const std::out_of_range&) {
            bad(key, *v);
        }
    }
    int geti(const std::string& key, int def) const { return (int)integer(key, def); }
    int int_req(const std::string& key) const { return geti(key, 0); }
    uint64_t u64(const std::string& key, uint64_t def) const {
        int64_t x = integer(key, (int64_t)def);
        if (x < 0) throw std::invalid_argument("parameter '" + key + "' must be non-negative");
        return (uint64_t)x;
    }
    std::string str(const std::string& key, const std::string& def) const {
        const std::string* v = find(key);
        return v ? *v : def;
    }
};

// ---------------------------------------------------------------------------
// Record emission

void check_finite(const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it->is_number_float() && !std::isfinite(it->get<double>()))
            throw std::runtime_error("non-finite numeric field '" + it.key() + "' in result record");
}

class Emitter {
public:
    Emitter(std::ostream& out, const ExperimentManifest& man)
        : out_(out), csv_(man.format == "csv"), digest_(param_digest(man)), seed_(man.seed) {
        if (csv_)
            out_ << "# " << manifest_json(man) << "\nrow,op,field,value\n";
        else
            out_ << manifest_json(man) << "\n";
    }

    void record(json j) {
        j["digest"] = digest_;
        j["seed"] = seed_;
        check_finite(j);
        if (csv_) {
            const std::string op = j.value("op", "");
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it.key() == "op") continue;
                out_ << row_ << ',' << op << ',' << it.key() << ',' << it->dump() << "\n";
            }
        } else {
            out_ << j.dump() << "\n";
        }
        ++row_;
    }

private:
    std::ostream& out_;
    bool csv_;
    std::string digest_;
    uint64_t seed_;
    size_t row_ = 0;
};

LatticePoint origin_at(int n) { return LatticePoint{0, 0, 0, n}; }

Domain unit_ball(int n) { return Domain::ball(origin_at(n), Dyadic(1, 0)); }

i64 snap_units(double r, int n, const char* what) {
    const double u = r * std::pow(2.0, n);
    if (!(u >= 0.5) || u > 9.0e15) throw std::invalid_argument(std::string(what) + ": radius out of range");
    return (i64)std::llround(u);
}

int check_scale(int n, const char* sub) {
    if (n < 0 || n > 30) throw std::invalid_argument(std::string(sub) + ": n must lie in [0, 30]");
    return n;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        default: return "undecided";
    }
}

// ---------------------------------------------------------------------------
// Subcommand runners

int run_sample(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n = check_scale(pr.int_req("n"), "sample");
    const uint64_t samples = pr.u64("samples", 1);
    const std::string kind = pr.str("kind", "lerw");
    if (kind != "lerw" && kind != "srw")
        throw std::invalid_argument("sample: kind must be 'lerw' or 'srw'");
    const Domain dom = Domain::ball(origin_at(n), Dyadic(snap_units(pr.dbl("r", 1.0), n, "sample"), n));
    const bool binary = ends_with(man.output_path, ".l3dp");
    if (binary && samples != 1)
        throw std::invalid_argument("sample: .l3dp output requires --samples 1");
    for (uint64_t i = 0; i < samples; ++i) {
        RandomSource rs(man.seed, i);
        SimplePath p;
        uint64_t raw_len = 0;
        if (kind == "lerw") {
            p = sample_lerw(n, dom, rs);
        } else {
            WalkResult wr = sample_walk(origin_at(n), StopRule::exit_domain(dom), rs);
            if (wr.capped) throw std::runtime_error("sample: walk hit the hard step cap");
            p = wr.path;
        }
        raw_len = rs.draws();
        if (binary) write_bytes(man.output_path, encode_path(p));
        const auto& e = p.verts.back();
        em.record({{"op", "sample"},
                   {"index", i},
                   {"kind", kind},
                   {"len", p.len()},
                   {"walk_steps", raw_len},
                   {"end_x", e[0]},
                   {"end_y", e[1]},
                   {"end_z", e[2]}});
    }
    return 0;
}

int run_ust(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n = check_scale(pr.int_req("n"), "ust");
    const uint64_t samples = pr.u64("samples", 1);
    const Domain dom = Domain::ball(origin_at(n), Dyadic(snap_units(pr.dbl_req("r"), n, "ust"), n));
    for (uint64_t i = 0; i < samples; ++i) {
        RandomSource rs(man.seed, i);
        SpanningTree tree = sample_wired_ust(dom, rs);
        const std::string err = validate_tree(tree, dom);
        if (!err.empty()) throw std::runtime_error("ust: invalid tree on sample " + std::to_string(i) + ": " + err);
        json rec = {{"op", "ust"},
                    {"index", i},
                    {"vertices", tree.size()},
                    {"boundary_branches", tree.exits.size()}};
        if (tree.find(origin_at(n)))
            rec["depth0"] = tree_depth(tree, origin_at(n));
        em.record(std::move(rec));
    }
    return 0;
}

int run_beta(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n_hi = check_scale(pr.geti("n", 9), "beta");
    if (n_hi < 2) throw std::invalid_argument("beta: n must be at least 2");
    const uint64_t per = pr.u64("samples", 10000);
    const std::string variant = pr.str("variant", "unit_ball");
    if (variant != "unit_ball" && variant != "outer")
        throw std::invalid_argument("beta: variant must be 'unit_ball' or 'outer'");
    std::vector<std::pair<int, uint64_t>> schedule;
    for (int k = std::min(4, n_hi); k <= n_hi; ++k) schedule.push_back({k, per});
    const GrowthFit fit = estimate_length_moments(
        schedule, variant == "unit_ball" ? LengthVariant::unit_ball : LengthVariant::outer_domain, man.seed,
        man.workers);
    for (size_t i = 0; i < fit.n_values.size(); ++i)
        em.record({{"op", "beta.scale"},
                   {"n", fit.n_values[i]},
                   {"mean_len", fit.mean_len[i]},
                   {"std_err", fit.mean_stderr[i]},
                   {"n_samples", fit.samples_per_n[i]}});
    for (size_t i = 0; i < fit.n_values.size(); ++i)
        for (size_t j = 0; j < fit.tail_r.size(); ++j)
            em.record({{"op", "beta.tail"},
                       {"n", fit.n_values[i]},
                       {"r", fit.tail_r[j]},
                       {"coverage", fit.tail_cov[i][j]}});
    em.record({{"op", "beta.fit"},
               {"beta_hat", fit.beta_hat},
               {"std_err", fit.beta_stderr},
               {"ci_low", fit.ci_low},
               {"ci_high", fit.ci_high}});
    return 0;
}

int run_escape(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n_hi = pr.geti("n", 7);
    if (n_hi < 3 || n_hi > 12) throw std::invalid_argument("escape: n must lie in [3, 12]");
    const uint64_t samples = pr.u64("samples", 100000);
    std::vector<int> N_list;
    for (int k = 3; k <= n_hi; ++k) N_list.push_back(1 << k);
    const EscapeCurve ec = estimate_escape(N_list, samples, man.seed, man.workers);
    for (size_t i = 0; i < ec.N_values.size(); ++i)
        em.record({{"op", "escape.N"},
                   {"N", ec.N_values[i]},
                   {"es", ec.es[i].value},
                   {"std_err", ec.es[i].std_err},
                   {"n_samples", ec.es[i].n_samples}});
    em.record({{"op", "escape.fit"},
               {"slope", ec.slope},
               {"slope_stderr", ec.slope_stderr},
               {"es1_exact", ec.es1_exact}});
    return 0;
}

int run_quasiloops(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n = check_scale(pr.int_req("n"), "quasiloops");
    const uint64_t samples = pr.u64("samples", 1000);
    const double theta = pr.dbl("eps", 0.25);
    if (!(theta > 0.0) || theta >= 1.0) throw std::invalid_argument("quasiloops: eps (theta) must lie in (0, 1)");
    const i64 s1u = std::max<i64>(1, (i64)std::llround(theta * theta * std::pow(2.0, n)));
    const i64 s2u = std::max<i64>(1, (i64)std::llround(theta * std::pow(2.0, n)));
    if (s1u >= s2u) throw std::invalid_argument("quasiloops: inner radius must stay below the outer radius");
    const Domain dom = unit_ball(n);
    struct State {
        Accumulator acc;
        void merge(State& o) { acc.merge(o.acc); }
    };
    State st = parallel_fold(samples, man.workers, State{}, [&](uint64_t i, State& s) {
        RandomSource rs(man.seed, i);
        const SimplePath g = sample_lerw(n, dom, rs);
        s.acc.add(has_quasi_loop(g, Dyadic(s1u, n), Dyadic(s2u, n)) ? 1 : 0);
    });
    em.record({{"op", "quasiloops"},
               {"theta", theta},
               {"s1_units", s1u},
               {"s2_units", s2u},
               {"freq", st.acc.mean()},
               {"std_err", st.acc.stderr_mean()},
               {"n_samples", samples}});
    return 0;
}

int run_hittability(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n = check_scale(pr.int_req("n"), "hittability");
    const uint64_t samples = pr.u64("samples", 10000);
    const i64 su = snap_units(pr.dbl("r", 0.25), n, "hittability");
    RandomSource rs_path(man.seed, 0);
    const SimplePath g = sample_lerw(n, unit_ball(n), rs_path);
    const LatticePoint x = g.vertex(g.num_vertices() / 2);
    RandomSource rs_mc(man.seed, 1);
    const EstimateRecord est = estimate_hittability(g, x, Dyadic(su, n), samples, rs_mc);
    em.record({{"op", "hittability"},
               {"value", est.value},
               {"std_err", est.std_err},
               {"n_samples", est.n_samples},
               {"path_len", g.len()},
               {"s_units", su},
               {"x_x", x.x},
               {"x_y", x.y},
               {"x_z", x.z}});
    return 0;
}

int run_events(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n = check_scale(pr.int_req("n"), "events");
    const uint64_t paths = pr.u64("samples", 4);
    const double delta = pr.dbl_req("delta");
    const double eps = pr.dbl("eps", 0.1);
    const double r = pr.dbl("r", 0.25);
    const double beta = pr.dbl("beta", 1.6);
    const uint64_t mc = pr.u64("mc_samples", 2000);
    const Domain dom = unit_ball(n);
    bool undecided = false;
    for (uint64_t i = 0; i < paths; ++i) {
        RandomSource rs_path(man.seed, 2 * i);
        const SimplePath g = sample_lerw(n, dom, rs_path);
        RandomSource rs_mc(man.seed, 2 * i + 1);
        const EventReport er = check_F_events(g, beta, delta, eps, r, mc, rs_mc);
        const KEventReport ke = check_K_event(g, beta, delta, eps);
        em.record({{"op", "events.F"},
                   {"index", i},
                   {"len", g.len()},
                   {"N", er.taus.N},
                   {"increments", verdict_name(er.increments)},
                   {"hittability", verdict_name(er.hittability)},
                   {"isolation", verdict_name(er.isolation)},
                   {"overall", verdict_name(er.overall)},
                   {"points_checked", er.points_checked},
                   {"worst_phat", er.worst_phat},
                   {"worst_se", er.worst_se}});
        em.record({{"op", "events.K"},
                   {"index", i},
                   {"occurred", ke.occurred},
                   {"s", ke.s},
                   {"t", ke.t},
                   {"window", ke.window}});
        undecided = undecided || er.overall == Verdict::undecided;
    }
    return undecided ? 3 : 0;
}

int run_tube(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const TubeBatchResult r =
        run_tube_batch(pr.int_req("m"), pr.int_req("m0"), pr.int_req("n"), pr.dbl("beta", 1.6),
                       pr.dbl("cstar", 20.0), pr.u64("samples", 1000), man.seed, man.workers);
    em.record({{"op", "tube.batch"},
               {"m", r.m},
               {"m0", r.m0},
               {"n", r.n},
               {"beta", r.beta},
               {"cstar", r.cstar},
               {"samples", r.samples},
               {"capped", r.capped},
               {"full_f", r.full_f},
               {"full_fg", r.full_fg},
               {"full_fgj", r.full_fgj},
               {"u_count", r.u_count},
               {"l_count", r.l_count},
               {"am_count", r.am_count},
               {"decomposition_checked", r.decomposition_checked},
               {"decomposition_violations", r.decomposition_violations},
               {"modulus_checked", r.modulus_checked},
               {"modulus_violations", r.modulus_violations}});
    for (size_t i = 0; i < r.f_count.size(); ++i)
        em.record({{"op", "tube.stage"}, {"i", i}, {"f_count", r.f_count[i]}, {"fg_count", r.fg_count[i]}});
    for (const TubeSampleDetail& d : r.details)
        em.record({{"op", "tube.detail"},
                   {"sample", d.sample},
                   {"f_stages", d.f_stages},
                   {"fg_stages", d.fg_stages},
                   {"full", d.full},
                   {"g_all", d.g_all},
                   {"j_all", d.j_all},
                   {"l_ok", d.l_ok},
                   {"u_ok", d.u_ok},
                   {"am", d.am},
                   {"decomposition_ok", d.decomposition_ok},
                   {"crossing_time", d.crossing_time},
                   {"ratio", d.ratio},
                   {"modulus", d.modulus},
                   {"modulus_ok", d.modulus_ok}});
    for (size_t i = 0; i < r.crossing_times.size(); ++i)
        em.record(
            {{"op", "tube.crossing"}, {"index", i}, {"time", r.crossing_times[i]}, {"ratio", r.ratios[i]}});
    return 0;
}

int run_vevents(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int m = pr.int_req("m"), m0 = pr.int_req("m0");
    const int n = check_scale(pr.int_req("n"), "vevents");
    const int box_m = pr.geti("r", 1);
    const double chat = pr.dbl("chat", 1.0);
    const double beta = pr.dbl("beta", 1.6);
    const uint64_t samples = pr.u64("samples", 100);
    const uint64_t attempts = pr.u64("attempts", 1000);
    const TubePartition tube = build_tube_partition(m, m0, n);
    if (box_m < 1 || n - m > 60) throw std::invalid_argument("vevents: box half-width out of range");
    const i64 box_units = (i64)box_m << (n - m);
    const Domain box_dom = Domain::cube(origin_at(n), Dyadic(box_units - 1, n));
    const Domain ball_dom = unit_ball(n);
    for (uint64_t i = 0; i < samples; ++i) {
        RandomSource rs(man.seed, i);
        SimplePath lam;
        bool have_prefix = false;
        uint64_t prefix_tries = 0;
        for (; prefix_tries < attempts && !have_prefix; ++prefix_tries) {
            WalkResult wr = sample_walk(origin_at(n), StopRule::exit_domain(box_dom), rs);
            if (wr.capped) continue;
            SimplePath cand = erase_loops(wr.path);
            if (cand.verts.back()[0] == box_units) {
                lam = std::move(cand);
                have_prefix = true;
            }
        }
        if (!have_prefix) {
            em.record({{"op", "vevents.skip"}, {"index", i}, {"reason", "prefix"}});
            continue;
        }
        const ConditionedWalk cw =
            sample_conditioned_walk(lam.last(), StopRule::exit_domain(ball_dom), lam.vertices(), rs, attempts);
        if (!cw.ok) {
            em.record({{"op", "vevents.skip"}, {"index", i}, {"reason", "conditioning"}});
            continue;
        }
        VEventReport vr;
        try {
            vr = detect_v_events(lam, cw.path, tube, box_m, chat, beta);
        } catch (const std::exception& e) {
            throw std::runtime_error("vevents: sample " + std::to_string(i) + ": " + e.what());
        }
        em.record({{"op", "vevents"},
                   {"index", i},
                   {"prefix_len", lam.len()},
                   {"prefix_tries", prefix_tries},
                   {"walk_len", cw.path.len()},
                   {"walk_attempts", cw.attempts},
                   {"tau0", vr.tau0},
                   {"tau1", vr.tau1},
                   {"tau2", vr.tau2},
                   {"tau3", vr.tau3},
                   {"exit_time", vr.exit_time},
                   {"good_cuts", vr.good_cuts.size()},
                   {"k_star", vr.k_star},
                   {"u1", vr.u1},
                   {"u1_bound", vr.u1_bound},
                   {"v1", vr.v1.ok},
                   {"v1_clause", vr.v1.clause},
                   {"v2", vr.v2.ok},
                   {"v2_clause", vr.v2.clause},
                   {"v3", vr.v3.ok},
                   {"v3_clause", vr.v3.clause},
                   {"v4", vr.v4.ok},
                   {"v4_clause", vr.v4.clause},
                   {"v5", vr.v5.ok},
                   {"v5_clause", vr.v5.clause},
                   {"all", vr.all}});
    }
    return 0;
}

int run_modulus(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n = check_scale(pr.int_req("n"), "modulus");
    const double beta = pr.dbl("beta", 1.6);
    const uint64_t samples = pr.u64("samples", 100);
    const Domain dom = unit_ball(n);
    struct Row {
        uint64_t index;
        size_t len;
        double value, s, t;
    };
    struct State {
        std::vector<Row> rows;
        void merge(State& o) { rows.insert(rows.end(), o.rows.begin(), o.rows.end()); }
    };
    State st = parallel_fold(samples, man.workers, State{}, [&](uint64_t i, State& s) {
        RandomSource rs(man.seed, i);
        const SimplePath g = sample_lerw(n, dom, rs);
        const ParametrizedCurve c = parametrize(g, beta);
        ModulusWitness w;
        const double v = modulus_statistic(c, 1.0 / beta, 0, c.len(), &w);
        s.rows.push_back({i, g.len(), v, w.s, w.t});
    });
    for (const Row& r : st.rows)
        em.record({{"op", "modulus"},
                   {"index", r.index},
                   {"len", r.len},
                   {"value", r.value},
                   {"s", r.s},
                   {"t", r.t}});
    return 0;
}

int run_annulus_scan(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const int n = check_scale(pr.int_req("n"), "annulus-scan");
    const AnnulusScanParams params = {pr.int_req("m"), pr.int_req("m0"), pr.int_req("m1"),
                                      pr.dbl("cstar", 1.0)};
    const double beta = pr.dbl("beta", 1.6);
    const uint64_t samples = pr.u64("samples", 100);
    const Domain dom = unit_ball(n);
    std::map<int, std::pair<uint64_t, uint64_t>> per_l;  // l -> (windows, ok)
    uint64_t truncated = 0;
    for (uint64_t i = 0; i < samples; ++i) {
        RandomSource rs(man.seed, i);
        const SimplePath g = sample_lerw(n, dom, rs);
        const ParametrizedCurve c = parametrize(g, beta);
        const std::vector<AnnulusWindow> ws = modulus_per_annulus(c, params);
        for (const AnnulusWindow& w : ws) {
            em.record({{"op", "annulus.window"},
                       {"index", i},
                       {"l", w.l},
                       {"v_index", w.v_index},
                       {"has_w", w.has_w},
                       {"w_time", w.w_time},
                       {"modulus", w.modulus},
                       {"threshold", w.threshold},
                       {"ok", w.ok}});
            auto& agg = per_l[w.l];
            ++agg.first;
            agg.second += w.ok ? 1 : 0;
            if (!w.has_w) ++truncated;
        }
    }
    for (const auto& [l, agg] : per_l)
        em.record({{"op", "annulus.summary"}, {"l", l}, {"windows", agg.first}, {"ok", agg.second}});
    em.record({{"op", "annulus.truncated"}, {"count", truncated}});
    return 0;
}

Domain slab_product(int x_hi, int y_hi) {
    // {0..x_hi} x {0..y_hi} x {0} on the integer lattice.
    const Dyadic zero(0), t(4);
    std::vector<Domain> parts;
    parts.push_back(Domain::slab(0, 0, zero, false, Dyadic(x_hi), false, t));
    parts.push_back(Domain::slab(0, 1, zero, false, Dyadic(y_hi), false, t));
    parts.push_back(Domain::slab(0, 2, zero, false, zero, false, t));
    return Domain::intersection(std::move(parts));
}

int run_oracle(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    (void)man;
    const int r = pr.geti("r", 3);
    if (r < 1 || r > 12) throw std::invalid_argument("oracle: r must lie in [1, 12]");
    const int steps = pr.geti("steps", 8);
    if (steps < 1 || steps > 40) throw std::invalid_argument("oracle: steps must lie in [1, 40]");
    const Domain ball = Domain::ball(origin_at(0), Dyadic(r));
    em.record({{"op", "oracle.green"},
               {"r", r},
               {"g00", exact_green(ball, origin_at(0), origin_at(0))},
               {"points", ball.count_lattice_points()}});
    em.record({{"op", "oracle.tree_count"}, {"domain", "pair"}, {"count", spanning_tree_count(slab_product(1, 0))}});
    em.record({{"op", "oracle.tree_count"}, {"domain", "c4"}, {"count", spanning_tree_count(slab_product(1, 1))}});
    const LerwLaw law = exact_lerw_law(Domain::ball(origin_at(0), Dyadic(2)), steps);
    em.record({{"op", "oracle.lerw_law"},
               {"r", 2},
               {"max_steps", steps},
               {"entries", law.entries.size()},
               {"mass_defect", law.mass_defect},
               {"states_peak", law.states_peak}});
    if (pr.str("extrapolate", "0") == "1") {
        const GreenExtrapolation ge = green_extrapolation();
        em.record({{"op", "oracle.green_extrapolation"},
                   {"g0", ge.g0},
                   {"c0", ge.c0},
                   {"in6", ge.in_ball[0]},
                   {"in12", ge.in_ball[1]},
                   {"in24", ge.in_ball[2]}});
    }
    return 0;
}

int run_selftest(const ExperimentManifest& man, const ParamReader& pr, Emitter& em) {
    const uint64_t reps = pr.u64("samples", 100);
    bool all_ok = true;
    auto check = [&](const char* name, bool ok) {
        all_ok = all_ok && ok;
        em.record({{"op", "selftest"}, {"check", name}, {"pass", ok}});
    };

    {  // codec roundtrip on a random path
        RandomSource rs(man.seed, 0);
        LatticePath p(origin_at(3));
        for (int i = 0; i < 200; ++i) p.push(rs.next_direction());
        const LatticePath q = decode_path(encode_path(p));
        check("codec_roundtrip", q.n == p.n && q.verts == p.verts && q.steps == p.steps);
    }
    {  // loop erasure: simple, endpoint-preserving, idempotent
        bool ok = true;
        for (uint64_t i = 0; i < reps && ok; ++i) {
            RandomSource rs(man.seed, 1000 + i);
            LatticePath p(origin_at(0));
            for (int s = 0; s < 40; ++s) p.push(rs.next_direction());
            const SimplePath le = erase_loops(p);
            ok = le.is_simple() && le.verts.front() == p.verts.front() && le.verts.back() == p.verts.back() &&
                 erase_loops(le).verts == le.verts;
        }
        check("loop_erasure", ok);
    }
    {  // cut decomposition identity on walks to the exit of B(3)
        const Domain dom = Domain::ball(origin_at(0), Dyadic(3));
        bool ok = true;
        for (uint64_t i = 0; i < reps && ok; ++i) {
            RandomSource rs(man.seed, 2000 + i);
            const WalkResult wr = sample_walk(origin_at(0), StopRule::exit_domain(dom), rs);
            const SimplePath whole = erase_loops(wr.path);
            for (size_t k : cut_times(wr.path)) {
                const auto [head, tail] = decompose_at_cut(wr.path, k);
                if (concat(head, tail).verts != whole.verts) {
                    ok = false;
                    break;
                }
            }
        }
        check("cut_decomposition", ok);
    }
    {  // Green symmetry and the mean-value identity at the origin
        const Domain dom = Domain::ball(origin_at(0), Dyadic(2));
        const LatticePoint y{1, 0, 0, 0};
        const double gxy = exact_green(dom, origin_at(0), y);
        const double gyx = exact_green(dom, y, origin_at(0));
        double nb = 0;
        for (const auto& d : kDirections) {
            const LatticePoint u{d[0], d[1], d[2], 0};
            if (dom.contains(u)) nb += exact_green(dom, u, y);
        }
        const double defect = std::abs(gxy - nb / 6.0);  // G(0,y) = delta + avg of neighbours
        check("green_oracle", std::abs(gxy - gyx) < 1e-10 && defect < 1e-9);
    }
    {  // curve metric sanity
        RandomSource rs(man.seed, 3000);
        LatticePath p(origin_at(2));
        for (int s = 0; s < 30; ++s) p.push(rs.next_direction());
        const ParametrizedCurve a = parametrize(erase_loops(p), 1.5);
        LatticePath p2(origin_at(2));
        for (int s = 0; s < 25; ++s) p2.push(rs.next_direction());
        const ParametrizedCurve b = parametrize(erase_loops(p2), 1.5);
        const double dab = rho_distance(a, b), dba = rho_distance(b, a);
        check("rho_metric", std::abs(dab - dba) < 1e-12 && rho_distance(a, a) == 0.0);
    }
    {  // hausdorff on singletons equals the point distance
        std::vector<LatticePoint> a = {origin_at(0)}, b = {{3, 4, 0, 0}};
        check("hausdorff", hausdorff_distance(a, b) == 5.0);
    }
    return all_ok ? 0 : 1;
}

} // namespace

// ---------------------------------------------------------------------------
// Binary path codec

std::vector<uint8_t> encode_path(const LatticePath& path) {
    if (path.empty_path()) throw std::invalid_argument("encode_path: empty path");
    if (path.n < 0 || path.n > 255) throw std::invalid_argument("encode_path: scale does not fit the format");
    std::vector<uint8_t> b;
    b.reserve(38 + path.steps.size());
    for (char c : {'L', '3', 'D', 'P'}) b.push_back((uint8_t)c);
    b.push_back(0x01);
    b.push_back((uint8_t)path.n);
    auto put64 = [&](uint64_t v) {
        for (int i = 0; i < 8; ++i) b.push_back((uint8_t)(v >> (8 * i)));
    };
    for (int a = 0; a < 3; ++a) put64((uint64_t)path.verts[0][a]);
    put64((uint64_t)path.steps.size());
    for (uint8_t c : path.steps) {
        if (c > 5) throw std::invalid_argument("encode_path: invalid step code");
        b.push_back(c);
    }
    return b;
}

LatticePath decode_path(const std::vector<uint8_t>& bytes) {
    auto need = [&](size_t upto, const char* what) {
        if (bytes.size() < upto)
            throw std::invalid_argument(std::string("decode_path: truncated ") + what + " at offset " +
                                        std::to_string(bytes.size()));
    };
    need(4, "magic");
    static const uint8_t magic[4] = {'L', '3', 'D', 'P'};
    for (size_t i = 0; i < 4; ++i)
        if (bytes[i] != magic[i])
            throw std::invalid_argument("decode_path: bad magic at offset " + std::to_string(i));
    need(5, "version");
    if (bytes[4] != 0x01)
        throw std::invalid_argument("decode_path: unsupported version at offset 4");
    need(38, "header");
    auto get64 = [&](size_t at) {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= (uint64_t)bytes[at + i] << (8 * i);
        return v;
    };
    const LatticePoint start{(i64)get64(6), (i64)get64(14), (i64)get64(22), (int)bytes[5]};
    const uint64_t count = get64(30);
    if (count > ((uint64_t)1 << 40))
        throw std::invalid_argument("decode_path: implausible step count at offset 30");
    need(38 + (size_t)count, "steps");
    LatticePath p(start);
    p.verts.reserve(count + 1);
    p.steps.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const uint8_t c = bytes[38 + i];
        if (c > 5)
            throw std::invalid_argument("decode_path: invalid step code " + std::to_string((int)c) +
                                        " at offset " + std::to_string(38 + i));
        p.push(c);
    }
    if (bytes.size() != 38 + count)
        throw std::invalid_argument("decode_path: trailing data at offset " + std::to_string(38 + count));
    return p;
}

std::vector<uint8_t> read_bytes(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + file + "' for reading");
    std::vector<uint8_t> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("read failure on '" + file + "'");
    return b;
}

void write_bytes(const std::string& file, const std::vector<uint8_t>& bytes) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + file + "' for writing");
    out.write((const char*)bytes.data(), (std::streamsize)bytes.size());
    if (!out) throw std::runtime_error("write failure on '" + file + "'");
}

// ---------------------------------------------------------------------------
// Configuration

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        out[key] = value;
    }
    return out;
}

std::map<std::string, std::string> load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open config file '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Manifests

std::string manifest_json(const ExperimentManifest& man) {
    // Worker count and output path never influence the records, so they are
    // left out of the echoed header to keep result files comparable.
    json m;
    m["params"] = json(man.params);
    m["seed"] = man.seed;
    m["subcommand"] = man.subcommand;
    m["version"] = man.version;
    if (!man.input_path.empty()) m["input"] = man.input_path;
    json root;
    root["manifest"] = std::move(m);
    return root.dump();
}

std::string param_digest(const ExperimentManifest& man) {
    std::string canon = man.subcommand;
    canon.push_back('\0');
    for (const auto& [k, v] : man.params) {
        canon += k;
        canon.push_back('=');
        canon += v;
        canon.push_back('\n');
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(canon));
    return std::string(buf);
}

int run_manifest(const ExperimentManifest& man, std::ostream& out) {
    try {
        validate_schema(man);
        const ParamReader pr{man};
        Emitter em(out, man);
        int code = 0;
        if (man.subcommand == "sample") code = run_sample(man, pr, em);
        else if (man.subcommand == "ust") code = run_ust(man, pr, em);
        else if (man.subcommand == "beta") code = run_beta(man, pr, em);
        else if (man.subcommand == "escape") code = run_escape(man, pr, em);
        else if (man.subcommand == "quasiloops") code = run_quasiloops(man, pr, em);
        else if (man.subcommand == "hittability") code = run_hittability(man, pr, em);
        else if (man.subcommand == "events") code = run_events(man, pr, em);
        else if (man.subcommand == "tube") code = run_tube(man, pr, em);
        else if (man.subcommand == "vevents") code = run_vevents(man, pr, em);
        else if (man.subcommand == "modulus") code = run_modulus(man, pr, em);
        else if (man.subcommand == "annulus-scan") code = run_annulus_scan(man, pr, em);
        else if (man.subcommand == "oracle") code = run_oracle(man, pr, em);
        else if (man.subcommand == "selftest") code = run_selftest(man, pr, em);
        out.flush();
        if (!out) throw std::runtime_error("write failure on the result stream");
        return code;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

int run_manifest(const ExperimentManifest& man) {
    // A .l3dp target takes the binary path; the JSONL records go to stdout.
    if (man.output_path.empty() || ends_with(man.output_path, ".l3dp"))
        return run_manifest(man, std::cout);
    std::ofstream f(man.output_path, std::ios::binary);
    if (!f) {
        std::cerr << "runtime error: cannot open '" << man.output_path << "' for writing\n";
        return 2;
    }
    return run_manifest(man, f);
}

} // namespace lerw
