#include "lerw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lerw {

double Accumulator::mean() const {
    if (count == 0) throw std::logic_error("accumulator: mean of zero samples");
    return (double)sum / (double)count;
}

double Accumulator::variance() const {
    if (count < 2) return 0.0;
    // n * sum_sq - sum^2 is an exact integer; one division at the end.
    i128 num = (i128)count * sum_sq - sum * sum;
    return (double)num / ((double)count * (double)(count - 1));
}

double Accumulator::stderr_mean() const {
    if (count == 0) throw std::logic_error("accumulator: stderr of zero samples");
    return std::sqrt(variance() / (double)count);
}

double gamma_p(double a, double x) {
    if (a <= 0 || x < 0 || !std::isfinite(x)) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0) return 0.0;
    if (x >= a + 1.0) return 1.0 - gamma_q(a, x);
    // series: P(a,x) = x^a e^-x / Gamma(a) * sum x^k / (a(a+1)...(a+k))
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q(double a, double x) {
    if (a <= 0 || x < 0 || !std::isfinite(x)) throw std::invalid_argument("gamma_q: bad arguments");
    if (x < a + 1.0) return 1.0 - gamma_p(a, x);
    // modified Lentz continued fraction for Q(a,x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        double an = -(double)i * ((double)i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_sf(double x, double k) {
    if (k <= 0) throw std::invalid_argument("chi2_sf: dof must be positive");
    if (x <= 0) return 1.0;
    return gamma_q(k / 2.0, x / 2.0);
}

namespace {

// Pools categories (ascending by expected count) until every kept category
// meets the floor, then computes the Pearson statistic.
Chi2Result pearson_with_pooling(const std::vector<double>& expected, const std::vector<double>& observed,
                                double min_expected, double extra_dof_loss) {
    size_t k = expected.size();
    std::vector<size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return expected[i] < expected[j]; });

    std::vector<double> e, o;
    double pool_e = 0, pool_o = 0;
    bool pooling = false;
    size_t pooled = 0;
    // Walk categories from smallest expected upward, absorbing into one pooled
    // cell until it clears the floor.
    for (size_t idx : order) {
        if (pooling || expected[idx] < min_expected) {
            pool_e += expected[idx];
            pool_o += observed[idx];
            ++pooled;
            pooling = pool_e < min_expected;
        } else {
            e.push_back(expected[idx]);
            o.push_back(observed[idx]);
        }
    }
    if (pooled > 0) {
        if (pooling && !e.empty()) {
            // Pool never reached the floor on its own; fold in the smallest
            // kept category.
            pool_e += e.front();
            pool_o += o.front();
            e.erase(e.begin());
            o.erase(o.begin());
            ++pooled;
        }
        e.push_back(pool_e);
        o.push_back(pool_o);
    }

    Chi2Result r;
    r.cells_used = e.size();
    r.cells_pooled = pooled > 0 ? pooled - 1 : 0;
    double stat = 0;
    for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] <= 0) continue;
        double d = o[i] - e[i];
        stat += d * d / e[i];
    }
    r.statistic = stat;
    r.dof = (double)e.size() - 1.0 - extra_dof_loss;
    r.p_value = r.dof >= 1.0 ? chi2_sf(stat, r.dof) : 1.0;
    return r;
}

} // namespace

Chi2Result chi2_gof(const std::vector<uint64_t>& observed, const std::vector<double>& probs, double min_expected) {
    if (observed.size() != probs.size() || observed.empty())
        throw std::invalid_argument("chi2_gof: size mismatch or empty input");
    double psum = 0;
    for (double p : probs) {
        if (p < -1e-15) throw std::invalid_argument("chi2_gof: negative probability");
        psum += p;
    }
    if (std::fabs(psum - 1.0) > 1e-9)
        throw std::invalid_argument("chi2_gof: probabilities must sum to 1 (add a remainder category)");
    uint64_t total = 0;
    for (uint64_t c : observed) total += c;
    if (total == 0) throw std::invalid_argument("chi2_gof: no observations");

    std::vector<double> expected(probs.size()), obs(observed.size());
    for (size_t i = 0; i < probs.size(); ++i) {
        expected[i] = probs[i] * (double)total;
        obs[i] = (double)observed[i];
    }
    return pearson_with_pooling(expected, obs, min_expected, 0.0);
}

Chi2Result chi2_homogeneity(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b, double min_expected) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("chi2_homogeneity: size mismatch or empty");
    double na = 0, nb = 0;
    for (uint64_t c : a) na += (double)c;
    for (uint64_t c : b) nb += (double)c;
    if (na == 0 || nb == 0) throw std::invalid_argument("chi2_homogeneity: empty sample");
    double total = na + nb;

    // Pool columns whose column total is too small for both row cells to meet
    // the floor, then compute the 2xK Pearson statistic.
    size_t k = a.size();
    std::vector<size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return a[i] + b[i] < a[j] + b[j]; });
    double min_row_share = std::min(na, nb) / total;

    std::vector<double> ca, cb;
    double pa = 0, pb = 0;
    bool pooling = false;
    size_t pooled = 0;
    for (size_t idx : order) {
        double col = (double)(a[idx] + b[idx]);
        if (pooling || col * min_row_share < min_expected) {
            pa += (double)a[idx];
            pb += (double)b[idx];
            ++pooled;
            pooling = (pa + pb) * min_row_share < min_expected;
        } else {
            ca.push_back((double)a[idx]);
            cb.push_back((double)b[idx]);
        }
    }
    if (pooled > 0) {
        if (pooling && !ca.empty()) {
            pa += ca.front();
            pb += cb.front();
            ca.erase(ca.begin());
            cb.erase(cb.begin());
            ++pooled;
        }
        ca.push_back(pa);
        cb.push_back(pb);
    }

    Chi2Result r;
    r.cells_used = ca.size();
    r.cells_pooled = pooled > 0 ? pooled - 1 : 0;
    double stat = 0;
    for (size_t i = 0; i < ca.size(); ++i) {
        double col = ca[i] + cb[i];
        if (col <= 0) continue;
        double ea = col * na / total;
        double eb = col * nb / total;
        double da = ca[i] - ea;
        double db = cb[i] - eb;
        stat += da * da / ea + db * db / eb;
    }
    r.statistic = stat;
    r.dof = (double)ca.size() - 1.0;
    r.p_value = r.dof >= 1.0 ? chi2_sf(stat, r.dof) : 1.0;
    return r;
}

LineFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& se) {
    size_t k = x.size();
    if (k < 2 || y.size() != k || se.size() != k)
        throw std::invalid_argument("fit_line_weighted: need at least two points with matching errors");
    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (size_t i = 0; i < k; ++i) {
        if (!(se[i] > 0)) throw std::invalid_argument("fit_line_weighted: standard errors must be positive");
        double w = 1.0 / (se[i] * se[i]);
        S += w;
        Sx += w * x[i];
        Sy += w * y[i];
        Sxx += w * x[i] * x[i];
        Sxy += w * x[i] * y[i];
    }
    double det = S * Sxx - Sx * Sx;
    if (det <= 0) throw std::invalid_argument("fit_line_weighted: degenerate abscissae");
    LineFit f;
    f.slope = (S * Sxy - Sx * Sy) / det;
    f.intercept = (Sxx * Sy - Sx * Sxy) / det;
    f.slope_stderr = std::sqrt(S / det);
    f.intercept_stderr = std::sqrt(Sxx / det);
    f.ci_half_width = 1.96 * f.slope_stderr;
    return f;
}

} // namespace lerw
