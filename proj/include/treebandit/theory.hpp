#pragma once

#include <cstdint>
#include <vector>

#include "treebandit/util.hpp"

namespace treebandit {

// One arm's history summary: n observations with success fraction p,
// where n * p is a whole number of successes.
struct ArmSummary {
    int64_t n = 0;
    double p = 0.0;
};

void validate_arm(const ArmSummary& a);

// Regularized incomplete beta I_z(alpha, beta) for whole-number shapes,
// computed through the binomial tail identity
//   I_z(a, b) = P(Binomial(a + b - 1, z) >= a).
double beta_cdf(int64_t alpha, int64_t beta, double z);

// P(Binomial(n, p) / n <= z); z below 0 gives 0, z at or above 1 gives 1.
double scaled_binomial_cdf(int64_t n, double p, double z);

struct CdfDistance {
    double sup = 0.0;   // sup_z |Beta(np, n(1-p)) cdf - Binomial(n,p)/n cdf|
    double z_star = 0.0;
};

// Maximizes over the binomial jump points k/n and their left limits, which
// carry the supremum since the difference is monotone between jumps.
CdfDistance sup_cdf_distance(int64_t n, double p);

// Exact selection probabilities when each arm's estimate is an independent
// Binomial(n_k, p_k)/n_k draw and ties split uniformly among maximizers.
// Enumerates the joint pmf; throws "use Monte Carlo estimator" when the
// support product exceeds 1e7.
std::vector<double> bootstrap_action_probs(const std::vector<ArmSummary>& arms);

// Selection probabilities when arm k's estimate is an independent
// Beta(n_k p_k, n_k (1 - p_k)) draw: P(k) = integral f_k prod_{j!=k} F_j,
// by adaptive quadrature to absolute tolerance 1e-6.
std::vector<double> ts_action_probs(const std::vector<ArmSummary>& arms);

struct TieBound {
    double tie_cap = 0.0;  // max_i pmf(n, p, i)
    int64_t argmax = 0;
    double bound = 0.0;    // (1 + 1/(4n)) / sqrt(2 pi n p (1-p))
    bool ok = false;
};

TieBound tie_bound_check(const ArmSummary& arm);

struct ComparisonReport {
    std::vector<double> ts_probs;
    std::vector<double> bootstrap_probs;
    double max_abs_diff = 0.0;
    double bound_value = 0.0;  // sum_j 1/sqrt(n_j)
};

ComparisonReport theorem1_report(const std::vector<ArmSummary>& arms);

// Least-squares slope of log(y) against log(x). Needs >= 4 points and
// strictly positive values; throws "slope undefined" otherwise.
double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// Decay rate of sup_cdf_distance(n, p) across the given n values.
double lemma1_slope(double p, const std::vector<int64_t>& ns);

// Decay rate of the TS-vs-bootstrap selection gap as both arm histories are
// scaled by the given whole-number factors.
double theorem1_slope(const std::vector<ArmSummary>& base_arms, const std::vector<int64_t>& scales);

}  // namespace treebandit
