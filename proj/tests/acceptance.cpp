// End-to-end checks with stated tolerances. Each one prints a single

// PASS/FAIL line; the exit code is nonzero when anything fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "treebandit/environments.hpp"
#include "treebandit/harness.hpp"
#include "treebandit/policies.hpp"
#include "treebandit/theory.hpp"
#include "treebandit/tree.hpp"

using namespace treebandit;

namespace {

int failures = 0;

void report(int idx, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: the cdf distance between the resampling law and its limiting
// beta shape decays like n^-1/2.

void criterion1() {
    Timer timer;
    std::vector<int64_t> ns{16, 64, 256, 1024, 4096};
    double lo = 1e9, hi = 0.0;
    for (int64_t n : ns) {
        double scaled = sup_cdf_distance(n, 0.5).sup * std::sqrt(static_cast<double>(n));
        lo = std::min(lo, scaled);
        hi = std::max(hi, scaled);
    }
    double slope = lemma1_slope(0.5, ns);
    double elapsed = timer.seconds();
    bool ok = slope > -0.65 && slope < -0.35 && hi <= 2.0 * lo && elapsed < 5.0;
    report(1, ok,
           fmt("sup distance decay slope %.4f (want [-0.65,-0.35]), scaled sup in [%.4f,%.4f] spread %.2fx, %.2fs",
               slope, lo, hi, hi / lo, elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 2: for every history size up to 64 the modal resampled count is
// the observed success count and its mass obeys the local limit bound.

void criterion2() {
    Timer timer;
    int checked = 0;
    bool ok = true;
    for (int64_t n = 2; n <= 64 && ok; ++n) {
        for (int64_t s = 1; s < n && ok; ++s) {
            TieBound tb = tie_bound_check({n, static_cast<double>(s) / static_cast<double>(n)});
            ok = tb.ok && tb.argmax == s;
            ++checked;
        }
    }
    double elapsed = timer.seconds();
    ok = ok && elapsed < 1.0;
    report(2, ok, fmt("%d (n, successes) pairs: tie mass <= bound and mode at the observed count, %.2fs",
                      checked, elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 3: selection probabilities from the resampling law and the beta
// posterior law, each checked against an oracle built from scratch here, and
// the gap between the two laws shrinks as histories scale up.

struct BetaOracle {
    int64_t a, b;
    std::vector<double> logc;  // log C(n,k), n = a + b - 1

    BetaOracle(int64_t alpha, int64_t beta) : a(alpha), b(beta), logc(alpha + beta) {
        int64_t n = a + b - 1;
        for (int64_t k = 0; k <= n; ++k)
            logc[k] = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(n - k) + 1.0);
    }
    double pdf(double z) const {
        if (z <= 0.0) return a == 1 ? static_cast<double>(b) : 0.0;
        if (z >= 1.0) return b == 1 ? static_cast<double>(a) : 0.0;
        double lb = std::lgamma(static_cast<double>(a + b)) - std::lgamma(static_cast<double>(a)) -
                    std::lgamma(static_cast<double>(b));
        return std::exp(lb + static_cast<double>(a - 1) * std::log(z) +
                        static_cast<double>(b - 1) * std::log1p(-z));
    }
    double cdf(double z) const {
        if (z <= 0.0) return 0.0;
        if (z >= 1.0) return 1.0;
        int64_t n = a + b - 1;
        double lz = std::log(z), lq = std::log1p(-z), s = 0.0;
        for (int64_t k = a; k <= n; ++k)
            s += std::exp(logc[k] + static_cast<double>(k) * lz + static_cast<double>(n - k) * lq);
        return std::min(1.0, s);
    }
};

std::vector<double> oracle_posterior_probs(const ArmSummary& x, const ArmSummary& y) {
    auto params = [](const ArmSummary& arm) {
        int64_t s = std::llround(static_cast<double>(arm.n) * arm.p);
        return BetaOracle(s, arm.n - s);
    };
    BetaOracle bx = params(x), by = params(y);
    auto integrate = [](const BetaOracle& f, const BetaOracle& g) {
        const int kIntervals = 1 << 13;
        double h = 1.0 / kIntervals;
        double s = f.pdf(0.0) * g.cdf(0.0) + f.pdf(1.0) * g.cdf(1.0);
        for (int i = 1; i < kIntervals; ++i) {
            double z = static_cast<double>(i) * h;
            s += f.pdf(z) * g.cdf(z) * (i % 2 ? 4.0 : 2.0);
        }
        return s * h / 3.0;
    };
    return {integrate(bx, by), integrate(by, bx)};
}

std::vector<double> oracle_resample_probs(const ArmSummary& x, const ArmSummary& y) {
    auto pmf = [](const ArmSummary& arm) {
        std::vector<double> out(arm.n + 1);
        for (int64_t k = 0; k <= arm.n; ++k) {
            double lc = std::lgamma(static_cast<double>(arm.n) + 1.0) -
                        std::lgamma(static_cast<double>(k) + 1.0) -
                        std::lgamma(static_cast<double>(arm.n - k) + 1.0);
            out[k] = std::exp(lc + static_cast<double>(k) * std::log(arm.p) +
                              static_cast<double>(arm.n - k) * std::log1p(-arm.p));
        }
        return out;
    };
    std::vector<double> px = pmf(x), py = pmf(y);
    double wx = 0.0, wy = 0.0;
    for (int64_t i = 0; i <= x.n; ++i) {
        for (int64_t j = 0; j <= y.n; ++j) {
            double pr = px[i] * py[j];
            int64_t lhs = i * y.n, rhs = j * x.n;
            if (lhs > rhs) wx += pr;
            else if (lhs < rhs) wy += pr;
            else {
                wx += 0.5 * pr;
                wy += 0.5 * pr;
            }
        }
    }
    return {wx, wy};
}

void criterion3() {
    Timer timer;
    std::vector<ArmSummary> base{{8, 0.5}, {12, 2.0 / 3.0}};
    std::vector<int64_t> scales{1, 4, 16};
    double worst = 0.0;
    std::vector<double> gaps;
    for (int64_t s : scales) {
        std::vector<ArmSummary> arms = base;
        for (ArmSummary& a : arms) a.n *= s;
        ComparisonReport r = theorem1_report(arms);
        std::vector<double> ts_oracle = oracle_posterior_probs(arms[0], arms[1]);
        std::vector<double> boot_oracle = oracle_resample_probs(arms[0], arms[1]);
        double gap_oracle = 0.0;
        for (int k = 0; k < 2; ++k) {
            worst = std::max(worst, std::abs(r.ts_probs[k] - ts_oracle[k]));
            worst = std::max(worst, std::abs(r.bootstrap_probs[k] - boot_oracle[k]));
            gap_oracle = std::max(gap_oracle, std::abs(ts_oracle[k] - boot_oracle[k]));
        }
        worst = std::max(worst, std::abs(r.max_abs_diff - gap_oracle));
        gaps.push_back(r.max_abs_diff);
    }
    double elapsed = timer.seconds();
    bool ok = worst <= 1e-6 && gaps[1] < gaps[0] && gaps[2] < gaps[1] && elapsed < 10.0;
    report(3, ok,
           fmt("selection probs within %.2e of scratch oracles (want <=1e-6); gap %.5f -> %.5f -> %.5f at 1x/4x/16x, %.2fs",
               worst, gaps[0], gaps[1], gaps[2], elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 4: with all history at one context the bootstrap policy's pick
// frequency matches the exact resampling law.

void criterion4() {
    Timer timer;
    std::vector<Feature> fs{{"flag", FeatureKind::categorical, {"0", "1"}}};
    auto schema = std::make_shared<FeatureSchema>(std::move(fs));
    TreeBootstrapPolicy policy(schema, 2);
    Rng rng(2024);
    ContextVector x{1.0};
    policy.update(x, 0, 1, rng);
    policy.update(x, 0, 0, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 0, rng);

    std::vector<double> exact = bootstrap_action_probs({{2, 0.5}, {3, 2.0 / 3.0}});
    const int kDraws = 100000;
    int arm0 = 0;
    for (int i = 0; i < kDraws; ++i) arm0 += policy.select(x, rng) == 0 ? 1 : 0;
    double freq = static_cast<double>(arm0) / kDraws;
    double se = std::sqrt(exact[0] * (1.0 - exact[0]) / kDraws);
    double elapsed = timer.seconds();
    bool ok = std::abs(freq - exact[0]) < 3.0 * se && elapsed < 30.0;
    report(4, ok, fmt("pick rate %.5f vs exact %.5f, |diff| %.5f < 3 MC SE %.5f at 1e5 draws, %.2fs", freq,
                      exact[0], std::abs(freq - exact[0]), 3.0 * se, elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 5: the learner's root split ties the best split found by a
// from-scratch exhaustive search, and separable data is fit exactly.

double split_gain(const ActionDataset& d, int f, bool continuous, double thr, uint64_t mask, int min_leaf) {
    auto gini = [](int64_t m, int64_t m1) {
        if (m == 0) return 0.0;
        double p = static_cast<double>(m1) / static_cast<double>(m);
        return 2.0 * p * (1.0 - p);
    };
    int64_t n = d.size(), n1 = 0, nl = 0, n1l = 0;
    for (int64_t r = 0; r < n; ++r) {
        int y = d.reward(r);
        double v = d.value(r, f);
        n1 += y;
        bool left = continuous ? v <= thr : ((mask >> static_cast<uint64_t>(v)) & 1ULL) != 0;
        if (left) {
            ++nl;
            n1l += y;
        }
    }
    if (nl < min_leaf || n - nl < min_leaf) return -1.0;
    return gini(n, n1) - static_cast<double>(nl) / static_cast<double>(n) * gini(nl, n1l) -
           static_cast<double>(n - nl) / static_cast<double>(n) * gini(n - nl, n1 - n1l);
}

double best_gain_everywhere(const ActionDataset& d, int min_leaf) {
    const FeatureSchema& s = *d.schema();
    double best = -1.0;
    for (int f = 0; f < s.dimension(); ++f) {
        if (s.feature(f).kind == FeatureKind::continuous) {
            std::vector<double> vals;
            for (int64_t r = 0; r < d.size(); ++r) vals.push_back(d.value(r, f));
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t i = 0; i + 1 < vals.size(); ++i)
                best = std::max(best, split_gain(d, f, true, vals[i], 0, min_leaf));
        } else {
            uint64_t levels = s.feature(f).levels.size();
            for (uint64_t mask = 1; mask + 1 < (1ULL << levels); ++mask)
                best = std::max(best, split_gain(d, f, false, 0.0, mask, min_leaf));
        }
    }
    return best;
}

void criterion5() {
    Timer timer;
    Rng rng(4242);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int agreed = 0;
    const int kTrials = 100;
    for (int trial = 0; trial < kTrials; ++trial) {
        std::vector<Feature> fs;
        for (int f = 0; f < 3; ++f) fs.push_back({"x" + std::to_string(f), FeatureKind::continuous, {}});
        bool with_cat = trial % 4 == 0;
        if (with_cat) fs.push_back({"k", FeatureKind::categorical, {"a", "b", "c"}});
        auto schema = std::make_shared<FeatureSchema>(std::move(fs));
        ActionDataset d(0, schema);
        int n = 40 + trial % 50;
        for (int i = 0; i < n; ++i) {
            ContextVector x{unif(rng), unif(rng), unif(rng)};
            if (with_cat) x.push_back(static_cast<double>(rng() % 3));
            double p = (x[0] < 0.5 ? 0.2 : 0.7) + (x[1] < 0.3 ? 0.1 : 0.0);
            d.append(x, unif(rng) < p ? 1 : 0);
        }
        CartConfig cfg;
        cfg.complexity_grid = {0.0};
        Rng fit_rng(9000 + trial);
        DecisionTree t = fit_cart(d, cfg, fit_rng);
        double best = best_gain_everywhere(d, cfg.min_leaf_size);
        if (t.nodes()[0].is_leaf()) {
            if (best <= 1e-9) ++agreed;
            continue;
        }
        const SplitRule& s = t.nodes()[0].split;
        bool continuous = schema->feature(s.feature).kind == FeatureKind::continuous;
        double impl = split_gain(d, s.feature, continuous, s.threshold, s.left_levels, cfg.min_leaf_size);
        if (impl >= 0.0 && std::abs(impl - best) <= 1e-12) ++agreed;
    }

    // Separable labels are reproduced without error.
    ActionDataset sep(0, std::make_shared<FeatureSchema>(std::vector<Feature>{
                             {"u", FeatureKind::continuous, {}}, {"v", FeatureKind::continuous, {}}}));
    std::vector<int> labels;
    for (int i = 0; i < 300; ++i) {
        ContextVector x{unif(rng), unif(rng)};
        int y = x[0] > 0.5 ? 1 : 0;
        sep.append(x, y);
        labels.push_back(y);
    }
    Rng sep_rng(17);
    DecisionTree sep_tree = fit_cart(sep, CartConfig{}, sep_rng);
    int train_errors = 0;
    for (int64_t i = 0; i < sep.size(); ++i)
        train_errors += sep_tree.predict(sep.row(i).context) == static_cast<double>(labels[i]) ? 0 : 1;

    double elapsed = timer.seconds();
    bool ok = agreed == kTrials && train_errors == 0 && elapsed < 20.0;
    report(5, ok, fmt("root split tied the exhaustive search on %d/%d datasets, %d training errors on separable data, %.2fs",
                      agreed, kTrials, train_errors, elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 6: on the built-in simulation both tree policies drive late
// per-step regret under 0.02 and clearly beat context-blind sampling.

struct PolicyOutcome {
    double mean = 0.0;    // per-step regret over the last 1000 steps, averaged over reps
    double se = 0.0;
    int completed = 0;
};

PolicyOutcome late_regret(const std::string& policy_name, int64_t horizon, int reps, uint64_t seed) {
    TruthSpec truth = default_sports_truth();
    EnvFactory env_factory = [&truth](int) { return make_simulated_env(truth); };
    ExperimentConfig cfg;
    cfg.policy = policy_name;
    PolicyFactory pol_factory = [&cfg](const BanditEnvironment& env) {
        return make_policy(cfg.policy, env, cfg);
    };
    std::vector<RegretTrace> traces = run_replications(env_factory, pol_factory, horizon, reps, seed);
    std::vector<double> vals;
    for (const RegretTrace& tr : traces) {
        if (tr.failed || tr.steps.size() != static_cast<std::size_t>(horizon)) continue;
        double tail = tr.steps.back().cum_regret - tr.steps[tr.steps.size() - 1001].cum_regret;
        vals.push_back(tail / 1000.0);
    }
    PolicyOutcome out;
    out.completed = static_cast<int>(vals.size());
    if (vals.empty()) return out;
    for (double v : vals) out.mean += v;
    out.mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - out.mean) * (v - out.mean);
    if (vals.size() > 1) {
        var /= static_cast<double>(vals.size() - 1);
        out.se = std::sqrt(var / static_cast<double>(vals.size()));
    }
    return out;
}

void criterion6() {
    Timer timer;
    const int64_t kHorizon = 20000;
    const int kReps = 20;
    PolicyOutcome boot = late_regret("tree-bootstrap", kHorizon, kReps, 860000);
    PolicyOutcome heur = late_regret("tree-heuristic", kHorizon, kReps, 861000);
    PolicyOutcome blind = late_regret("ts-free", kHorizon, kReps, 862000);
    auto beats = [&](const PolicyOutcome& a) {
        double margin = blind.mean - a.mean;
        double se = std::sqrt(a.se * a.se + blind.se * blind.se);
        return margin > 3.0 * se;
    };
    bool ok = boot.completed == kReps && heur.completed == kReps && blind.completed == kReps &&
              boot.mean < 0.02 && heur.mean < 0.02 && beats(boot) && beats(heur);
    report(6, ok,
           fmt("late per-step regret (T=20000, 20 reps): resample %.4f+-%.4f, leaf-posterior %.4f+-%.4f (want <0.02), "
               "context-blind %.4f+-%.4f beaten by >3 SE, %.0fs",
               boot.mean, boot.se, heur.mean, heur.se, blind.mean, blind.se, timer.seconds()));
}

// ---------------------------------------------------------------------------
// Criterion 7: frozen one-vs-rest trees on a depth-2 ground truth classify a
// holdout nearly perfectly and never beat the oracle replay.

void criterion7() {
    Timer timer;
    auto schema = std::make_shared<FeatureSchema>(std::vector<Feature>{
        {"u", FeatureKind::continuous, {}}, {"v", FeatureKind::continuous, {}}});
    ClassificationTable table;
    table.schema = schema;
    table.class_names = {"ne", "se", "nw", "sw"};
    table.class_counts.assign(4, 0);
    Rng data_rng(7117);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 4000; ++i) {
        double u = unif(data_rng), v = unif(data_rng);
        int label = u > 0.5 ? (v > 0.5 ? 0 : 1) : (v > 0.5 ? 2 : 3);
        table.rows.push_back({u, v});
        table.labels.push_back(label);
        ++table.class_counts[label];
    }

    Rng fit_rng(7118);
    OfflineFit fit = offline_tree_fit(table, 1000, CartConfig{}, fit_rng);
    auto holdout = std::make_shared<const ClassificationTable>(std::move(fit.holdout));

    auto env = make_classification_env(holdout, 99);
    Rng run_rng(7119);
    RegretTrace frozen = run_experiment(*env, *fit.policy, 1000, run_rng);

    auto env2 = make_classification_env(holdout, 99);
    OraclePolicy oracle(*env2);
    Rng oracle_rng(7119);
    RegretTrace best = run_experiment(*env2, oracle, 1000, oracle_rng);

    std::vector<double> rel = relative_regret(best, frozen);
    bool never_ahead = true;
    for (double d : rel) never_ahead = never_ahead && d <= 0.0;

    double per_step = frozen.steps.back().cum_regret / 1000.0;
    bool ok = !frozen.failed && !best.failed && per_step <= 0.02 && never_ahead;
    report(7, ok, fmt("frozen-tree holdout regret %.4f per step (want <=0.02), oracle replay never behind: %s, %.1fs",
                      per_step, never_ahead ? "yes" : "no", timer.seconds()));
}

// ---------------------------------------------------------------------------
// Criterion 8: regret identities hold in emitted files and identical
// command-line runs write identical bytes.

void criterion8() {
    Timer timer;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "treebandit_acceptance";
    fs::create_directories(dir);

    std::string cfg_path = (dir / "run.cfg").string();
    {
        std::ofstream cfg(cfg_path, std::ios::trunc);
        cfg << "policy = tree-heuristic\nhorizon = 150\nreplications = 2\nseed = 11\n";
    }
    std::string cli = TREEBANDIT_CLI_PATH;
    std::string out_a = (dir / "a.csv").string(), sum_a = (dir / "as.csv").string();
    std::string out_b = (dir / "b.csv").string(), sum_b = (dir / "bs.csv").string();
    int rc_a = std::system((cli + " run --config " + cfg_path + " --out " + out_a + " --summary " + sum_a +
                            " > /dev/null 2>&1").c_str());
    int rc_b = std::system((cli + " run --config " + cfg_path + " --out " + out_b + " --summary " + sum_b +
                            " > /dev/null 2>&1").c_str());
    std::string bytes_a = slurp(out_a);
    bool identical = rc_a == 0 && rc_b == 0 && !bytes_a.empty() && bytes_a == slurp(out_b) &&
                     slurp(sum_a) == slurp(sum_b);

    // Regret in the emitted file is the exact running sum of the steps.
    bool sums_ok = true;
    std::vector<RegretTrace> traces = parse_trace_text(bytes_a);
    sums_ok = sums_ok && traces.size() == 2;
    for (const RegretTrace& tr : traces) {
        double acc = 0.0;
        for (const StepRecord& s : tr.steps) {
            acc += s.inst_regret;
            sums_ok = sums_ok && s.cum_regret == acc;
        }
    }

    // On label data the final regret plus the number of correct picks is the
    // horizon, on the nose.
    std::string data_csv = (dir / "labels.csv").string(), data_schema = (dir / "labels.schema").string();
    {
        std::ofstream sch(data_schema, std::ios::trunc);
        sch << "feature v continuous\nlabel y\n";
        std::ofstream datafile(data_csv, std::ios::trunc);
        datafile << "v,y\n";
        Rng rng(88);
        for (int i = 0; i < 200; ++i)
            datafile << format_double(static_cast<double>(i) / 200.0) << ',' << (rng() % 2 ? "on" : "off") << '\n';
    }
    std::string cfg2_path = (dir / "labels.cfg").string();
    {
        std::ofstream cfg(cfg2_path, std::ios::trunc);
        cfg << "env = csv\ncsv = " << data_csv << "\nschema = " << data_schema
            << "\npolicy = ts-free\nhorizon = 200\nreplications = 1\nseed = 4\n";
    }
    std::string out_c = (dir / "c.csv").string();
    int rc_c = std::system((cli + " run --config " + cfg2_path + " --out " + out_c + " > /dev/null 2>&1").c_str());
    bool identity_ok = rc_c == 0;
    if (identity_ok) {
        std::vector<RegretTrace> label_traces = parse_trace_text(slurp(out_c));
        identity_ok = label_traces.size() == 1 && !label_traces[0].failed &&
                      label_traces[0].steps.size() == 200;
        if (identity_ok) {
            int64_t correct = 0;
            for (const StepRecord& s : label_traces[0].steps) {
                correct += s.reward;
                identity_ok = identity_ok && s.inst_regret == 1.0 - s.reward;
            }
            identity_ok =
                identity_ok && label_traces[0].steps.back().cum_regret + static_cast<double>(correct) == 200.0;
        }
    }

    bool ok = identical && sums_ok && identity_ok;
    report(8, ok, fmt("repeat runs byte-identical: %s; cum = running sum: %s; label run regret+correct = horizon: %s, %.1fs",
                      identical ? "yes" : "no", sums_ok ? "yes" : "no", identity_ok ? "yes" : "no",
                      timer.seconds()));
}

// ---------------------------------------------------------------------------
// Criterion 9: a width sweep over a quadrant-label dataset writes one trace
// per width and shows that some width beats the widest setting.

void criterion9() {
    Timer timer;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "treebandit_acceptance";
    fs::create_directories(dir);
    fs::path sweep_dir = dir / "sweep";
    fs::create_directories(sweep_dir);

    std::string data_csv = (dir / "quad.csv").string(), data_schema = (dir / "quad.schema").string();
    {
        std::ofstream sch(data_schema, std::ios::trunc);
        sch << "feature u continuous\nfeature v continuous\nfeature noise categorical a b c\nlabel y\n";
        std::ofstream datafile(data_csv, std::ios::trunc);
        datafile << "u,v,noise,y\n";
        Rng rng(9102);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        const double w[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
        const char* noise_levels[3] = {"a", "b", "c"};
        for (int i = 0; i < 5000; ++i) {
            double u = unif(rng), v = unif(rng);
            int label = 0;
            double top = -1e9;
            for (int k = 0; k < 4; ++k) {
                double score = w[k][0] * u + w[k][1] * v;
                if (score > top) {
                    top = score;
                    label = k;
                }
            }
            datafile << format_double(u) << ',' << format_double(v) << ',' << noise_levels[rng() % 3] << ",q"
                     << label << '\n';
        }
    }
    std::string cfg_path = (dir / "quad.cfg").string();
    {
        std::ofstream cfg(cfg_path, std::ios::trunc);
        cfg << "env = csv\ncsv = " << data_csv << "\nschema = " << data_schema
            << "\npolicy = linucb\nhorizon = 2500\nreplications = 2\nseed = 6\n";
    }

    std::vector<double> grid{0.0001, 0.001, 0.01, 0.1, 1.0, 10.0};
    std::string cli = TREEBANDIT_CLI_PATH;
    int rc = std::system((cli + " sweep --config " + cfg_path +
                          " --param alpha --grid 0.0001,0.001,0.01,0.1,1,10 --out-dir " + sweep_dir.string() +
                          " > /dev/null 2>&1").c_str());

    bool files_ok = rc == 0;
    std::vector<double> finals;
    for (double alpha : grid) {
        fs::path trace_path = sweep_dir / ("alpha_" + format_double(alpha) + ".csv");
        if (!fs::exists(trace_path)) {
            files_ok = false;
            break;
        }
        std::vector<RegretTrace> traces = parse_trace_text(slurp(trace_path.string()));
        if (traces.size() != 2 || traces[0].failed || traces[1].failed) {
            files_ok = false;
            break;
        }
        finals.push_back(summarize(traces).mean_cum_regret.back());
    }
    bool beat_widest = false;
    if (files_ok) {
        double widest = finals.back();
        for (std::size_t i = 0; i + 1 < finals.size(); ++i) beat_widest = beat_widest || finals[i] < widest;
    }
    bool ok = files_ok && beat_widest;
    std::string final_list;
    for (std::size_t i = 0; i < finals.size(); ++i)
        final_list += (i ? " " : "") + fmt("%.0f", finals[i]);
    report(9, ok, fmt("one trace per width: %s; final regrets across widths [%s]; some width beats 10: %s, %.1fs",
                      files_ok ? "yes" : "no", final_list.c_str(), beat_widest ? "yes" : "no",
                      timer.seconds()));
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
