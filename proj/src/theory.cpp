#include "treebandit/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace treebandit {

namespace {

constexpr double kQuadTol = 2.5e-7;
constexpr int64_t kEnumerationCap = 10'000'000;

// ln k!, cached.
const double* lfact_table(int64_t n) {
    static std::vector<double> table{0.0, 0.0};
    while (static_cast<int64_t>(table.size()) <= n)
        table.push_back(table.back() + std::log(static_cast<double>(table.size())));
    return table.data();
}

double binomial_log_pmf(const double* lf, int64_t n, double lp, double lq, int64_t k) {
    double t = lf[n] - lf[k] - lf[n - k];
    if (k > 0) t += k * lp;
    if (n - k > 0) t += (n - k) * lq;
    return t;
}

std::vector<double> binomial_pmf(int64_t n, double p) {
    const double* lf = lfact_table(n);
    double lp = std::log(p), lq = std::log1p(-p);
    std::vector<double> pmf(n + 1);
    for (int64_t k = 0; k <= n; ++k) pmf[k] = std::exp(binomial_log_pmf(lf, n, lp, lq, k));
    return pmf;
}

// P(Binomial(n, z) >= k), summed from the smaller tail.
double binomial_upper_tail(int64_t n, double z, int64_t k) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (z <= 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    const double* lf = lfact_table(n);
    double lp = std::log(z), lq = std::log1p(-z);
    double s = 0.0;
    if (static_cast<double>(k) > z * static_cast<double>(n)) {
        for (int64_t j = n; j >= k; --j) s += std::exp(binomial_log_pmf(lf, n, lp, lq, j));
        return std::min(1.0, s);
    }
    for (int64_t j = 0; j < k; ++j) s += std::exp(binomial_log_pmf(lf, n, lp, lq, j));
    return std::max(0.0, 1.0 - s);
}

struct BetaParams {
    int64_t alpha;
    int64_t beta;
};

BetaParams beta_params(const ArmSummary& a) {
    validate_arm(a);
    int64_t alpha = std::llround(static_cast<double>(a.n) * a.p);
    return {alpha, a.n - alpha};
}

double beta_log_pdf(int64_t alpha, int64_t beta, double z) {
    const double* lf = lfact_table(alpha + beta);
    double lbeta = lf[alpha - 1] + lf[beta - 1] - lf[alpha + beta - 1];
    double t = -lbeta;
    if (alpha > 1) t += (alpha - 1) * std::log(z);
    if (beta > 1) t += (beta - 1) * std::log1p(-z);
    return t;
}

}  // namespace

void validate_arm(const ArmSummary& a) {
    if (a.n < 1) throw std::invalid_argument("arm needs n >= 1");
    if (!(a.p > 0.0 && a.p < 1.0)) throw std::invalid_argument("arm needs p strictly inside (0,1)");
    double np = static_cast<double>(a.n) * a.p;
    if (std::abs(np - std::llround(np)) > 1e-9)
        throw std::invalid_argument("arm needs a whole number of successes (n*p integral)");
}

double beta_cdf(int64_t alpha, int64_t beta, double z) {
    if (alpha < 1 || beta < 1) throw std::invalid_argument("beta_cdf needs whole-number shapes >= 1");
    if (z < 0.0 || z > 1.0) throw std::invalid_argument("beta_cdf needs z in [0,1]");
    return binomial_upper_tail(alpha + beta - 1, z, alpha);
}

double scaled_binomial_cdf(int64_t n, double p, double z) {
    if (n < 1) throw std::invalid_argument("scaled_binomial_cdf needs n >= 1");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("scaled_binomial_cdf needs p in (0,1)");
    if (z < 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    int64_t kmax = static_cast<int64_t>(std::floor(static_cast<double>(n) * z + 1e-9));
    return 1.0 - binomial_upper_tail(n, p, kmax + 1);
}

CdfDistance sup_cdf_distance(int64_t n, double p) {
    ArmSummary arm{n, p};
    BetaParams bp = beta_params(arm);
    std::vector<double> pmf = binomial_pmf(n, p);
    std::vector<double> cdf(n + 1);
    double acc = 0.0;
    for (int64_t k = 0; k <= n; ++k) {
        acc += pmf[k];
        cdf[k] = std::min(1.0, acc);
    }

    CdfDistance out;
    for (int64_t k = 0; k <= n; ++k) {
        double z = static_cast<double>(k) / static_cast<double>(n);
        double bc = beta_cdf(bp.alpha, bp.beta, z);
        double at_jump = std::abs(bc - cdf[k]);
        if (at_jump > out.sup) {
            out.sup = at_jump;
            out.z_star = z;
        }
        if (k > 0) {
            double left_limit = std::abs(bc - cdf[k - 1]);
            if (left_limit > out.sup) {
                out.sup = left_limit;
                out.z_star = z;
            }
        }
    }
    return out;
}

namespace {

struct ArmSupport {
    int64_t n;
    std::vector<double> pmf;
};

void enumerate_outcomes(const std::vector<ArmSupport>& arms, std::size_t i, double prob, int64_t max_num,
                        int64_t max_den, std::vector<int>& tied, std::vector<double>& out) {
    if (prob == 0.0) return;
    if (i == arms.size()) {
        double share = prob / static_cast<double>(tied.size());
        for (int a : tied) out[a] += share;
        return;
    }
    const ArmSupport& arm = arms[i];
    for (int64_t k = 0; k <= arm.n; ++k) {
        int64_t lhs = k * max_den;
        int64_t rhs = max_num * arm.n;
        if (lhs < rhs) {
            enumerate_outcomes(arms, i + 1, prob * arm.pmf[k], max_num, max_den, tied, out);
        } else if (lhs == rhs) {
            tied.push_back(static_cast<int>(i));
            enumerate_outcomes(arms, i + 1, prob * arm.pmf[k], max_num, max_den, tied, out);
            tied.pop_back();
        } else {
            std::vector<int> fresh{static_cast<int>(i)};
            enumerate_outcomes(arms, i + 1, prob * arm.pmf[k], k, arm.n, fresh, out);
        }
    }
}

}  // namespace

std::vector<double> bootstrap_action_probs(const std::vector<ArmSummary>& arms) {
    if (arms.size() < 2) throw std::invalid_argument("need at least two arms");
    int64_t support = 1;
    std::vector<ArmSupport> sup;
    for (const auto& a : arms) {
        validate_arm(a);
        support *= a.n + 1;
        if (support > kEnumerationCap) throw std::runtime_error("use Monte Carlo estimator");
        sup.push_back({a.n, binomial_pmf(a.n, a.p)});
    }
    std::vector<double> out(arms.size(), 0.0);
    std::vector<int> tied;
    // Sentinel max below every support point: -1/1.
    enumerate_outcomes(sup, 0, 1.0, -1, 1, tied, out);
    return out;
}

namespace {

struct TsIntegrand {
    const std::vector<BetaParams>* params;
    std::size_t k;

    double operator()(double z) const {
        const auto& ps = *params;
        double v;
        if (z <= 0.0 || z >= 1.0) {
            // pdf vanishes at the ends unless a shape equals 1
            v = (z <= 0.0 && ps[k].alpha == 1) ? static_cast<double>(ps[k].beta)
                : (z >= 1.0 && ps[k].beta == 1) ? static_cast<double>(ps[k].alpha)
                                                : 0.0;
        } else {
            v = std::exp(beta_log_pdf(ps[k].alpha, ps[k].beta, z));
        }
        if (v == 0.0) return 0.0;
        for (std::size_t j = 0; j < ps.size(); ++j) {
            if (j == k) continue;
            v *= beta_cdf(ps[j].alpha, ps[j].beta, z);
            if (v == 0.0) return 0.0;
        }
        return v;
    }
};

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= 48) throw std::runtime_error("quadrature did not converge");
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

template <typename F>
double integrate01(const F& f, double tol) {
    constexpr int kPanels = 8;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        double a = static_cast<double>(i) / kPanels;
        double b = static_cast<double>(i + 1) / kPanels;
        double m = 0.5 * (a + b);
        double fa = f(a), fm = f(m), fb = f(b);
        double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(f, a, b, fa, fm, fb, whole, tol / kPanels, 0);
    }
    return total;
}

}  // namespace

std::vector<double> ts_action_probs(const std::vector<ArmSummary>& arms) {
    if (arms.size() < 2) throw std::invalid_argument("need at least two arms");
    std::vector<BetaParams> params;
    for (const auto& a : arms) params.push_back(beta_params(a));
    std::vector<double> out(arms.size());
    for (std::size_t k = 0; k < arms.size(); ++k)
        out[k] = integrate01(TsIntegrand{&params, k}, kQuadTol);
    return out;
}

TieBound tie_bound_check(const ArmSummary& arm) {
    validate_arm(arm);
    std::vector<double> pmf = binomial_pmf(arm.n, arm.p);
    TieBound out;
    for (int64_t k = 0; k <= arm.n; ++k) {
        if (pmf[k] > out.tie_cap) {
            out.tie_cap = pmf[k];
            out.argmax = k;
        }
    }
    double n = static_cast<double>(arm.n);
    out.bound = (1.0 + 1.0 / (4.0 * n)) / std::sqrt(2.0 * M_PI * n * arm.p * (1.0 - arm.p));
    out.ok = out.tie_cap <= out.bound;
    return out;
}

ComparisonReport theorem1_report(const std::vector<ArmSummary>& arms) {
    ComparisonReport r;
    r.ts_probs = ts_action_probs(arms);
    r.bootstrap_probs = bootstrap_action_probs(arms);
    for (std::size_t k = 0; k < arms.size(); ++k) {
        r.max_abs_diff = std::max(r.max_abs_diff, std::abs(r.ts_probs[k] - r.bootstrap_probs[k]));
        r.bound_value += 1.0 / std::sqrt(static_cast<double>(arms[k].n));
    }
    return r;
}

double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 4)
        throw std::invalid_argument("slope fit needs at least 4 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 1e-7)) throw std::runtime_error("slope undefined");
        double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw std::runtime_error("slope undefined");
    return (n * sxy - sx * sy) / denom;
}

double lemma1_slope(double p, const std::vector<int64_t>& ns) {
    std::vector<double> xs, ys;
    for (int64_t n : ns) {
        xs.push_back(static_cast<double>(n));
        ys.push_back(sup_cdf_distance(n, p).sup);
    }
    return fit_loglog_slope(xs, ys);
}

double theorem1_slope(const std::vector<ArmSummary>& base_arms, const std::vector<int64_t>& scales) {
    std::vector<double> xs, ys;
    for (int64_t s : scales) {
        if (s < 1) throw std::invalid_argument("scales must be positive");
        std::vector<ArmSummary> arms = base_arms;
        for (auto& a : arms) a.n *= s;
        xs.push_back(static_cast<double>(s));
        ys.push_back(theorem1_report(arms).max_abs_diff);
    }
    return fit_loglog_slope(xs, ys);
}

}  // namespace treebandit
