#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lerw/loop_erase.hpp"
#include "lerw/path.hpp"

namespace lerw {

// A lattice path read as a continuous curve in space-time: vertex i sits at
// spatial position verts[i] * 2^-n and time i * 2^-(beta*n), with linear
// interpolation in between.  The time normalization makes curves at
// different scales comparable.
struct ParametrizedCurve {
    int n = 0;
    double beta = 0;
    double dt = 0;                           // time between consecutive vertices
    std::vector<std::array<i64, 3>> verts;   // lattice units at scale n

    size_t num_vertices() const { return verts.size(); }
    size_t len() const { return verts.empty() ? 0 : verts.size() - 1; }
    double duration() const { return (double)len() * dt; }
    // Interpolated spatial position at time t (clamped to [0, duration]).
    std::array<double, 3> value_at(double t) const;
};

// Wraps a path; beta must lie in (1, 5/3].
ParametrizedCurve parametrize(const SimplePath& path, double beta);

// Sup-distance between two curves after affine reparametrization to [0, 1],
// plus the duration gap.  Exact for piecewise-linear curves: the supremum is
// attained at a breakpoint of one of the two reparametrized curves.  Curves
// of zero and positive duration cannot be compared (throws); two point
// curves compare by spatial distance.
double rho_distance(const ParametrizedCurve& a, const ParametrizedCurve& b);

struct ModulusWitness {
    double s = 0;
    double t = 0;
    double value = 0;
};

// sup |eta(t) - eta(s)| / (t - s)^h over pairs of sample times in the index
// window [i_lo, i_hi].  The witness receives the attaining pair.
double modulus_statistic(const ParametrizedCurve& c, double h, size_t i_lo, size_t i_hi,
                         ModulusWitness* witness = nullptr);

// Same statistic over [i_lo * dt, t_hi] where t_hi need not be a sample
// time; the interpolated curve point at t_hi joins the candidate set.
double modulus_statistic_to(const ParametrizedCurve& c, double h, size_t i_lo, double t_hi,
                            ModulusWitness* witness = nullptr);

// Times tau_0 = 0 < tau_1 < ... at which the path first moves a spatial
// distance delta^(1/beta - eps/100) from the previous mark.  N is the number
// of completed increments (taus.size() - 1).
struct TauSequence {
    std::vector<size_t> taus;
    size_t N = 0;
    i64 threshold_sq = 0;     // squared spatial threshold in lattice units
    bool delta_warning = false;  // set unless delta^(-eps/2) > 100
};
TauSequence compute_tau_sequence(const SimplePath& path, double beta, double delta, double eps);

// Shell-crossing windows: for each radius M_l = l * 2^-m1 (sup norm, up to
// 2/3), the window runs from the first vertex at sup-distance >= M_l to the
// first later time the curve moves Euclidean distance 150 * m0 * 2^-m.  The
// modulus of continuity at exponent 1/beta over each window is compared
// against cstar * m0^(1 - 1/beta).
struct AnnulusScanParams {
    int m = 0;
    int m0 = 0;
    int m1 = 0;
    double cstar = 0;
};

struct AnnulusWindow {
    int l = 0;
    size_t v_index = 0;     // first vertex index with sup norm >= M_l
    double w_time = 0;      // continuous window end, meaningful when has_w
    bool has_w = false;     // window end reached before the curve terminates
    double modulus = 0;
    double threshold = 0;
    bool ok = false;        // has_w and modulus < threshold
};

std::vector<AnnulusWindow> modulus_per_annulus(const ParametrizedCurve& c, const AnnulusScanParams& params);

} // namespace lerw
