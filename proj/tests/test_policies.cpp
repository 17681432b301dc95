#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "treebandit/policies.hpp"
#include "treebandit/theory.hpp"

using namespace treebandit;

namespace {

SchemaPtr one_flag_schema() {
    std::vector<Feature> fs{{"flag", FeatureKind::categorical, {"0", "1"}}};
    return std::make_shared<FeatureSchema>(std::move(fs));
}

ContextEncoder identity_encoder() {
    return [](const ContextVector& x) { return std::vector<double>(x.begin(), x.end()); };
}

}  // namespace

TEST_CASE("arm guard walks forced, free, eliminated") {
    ArmGuard g(3, 20);
    CHECK(g.mode(0) == ArmGuard::Mode::forced);
    CHECK(g.forced_action() == 0);

    g.record(0, 1);
    CHECK(g.mode(0) == ArmGuard::Mode::free);
    CHECK(g.forced_action() == 1);

    for (int i = 0; i < 19; ++i) g.record(1, 0);
    CHECK(g.mode(1) == ArmGuard::Mode::forced);
    g.record(1, 0);
    CHECK(g.mode(1) == ArmGuard::Mode::eliminated);
    CHECK(g.forced_action() == 2);

    // A success after many failures still frees the arm.
    g.set_counts(2, 1, 500);
    CHECK(g.mode(2) == ArmGuard::Mode::free);
    CHECK(!g.forced_action().has_value());

    // Without a threshold nothing is ever eliminated.
    ArmGuard open(2, std::nullopt);
    for (int i = 0; i < 1000; ++i) open.record(0, 0);
    CHECK(open.mode(0) == ArmGuard::Mode::forced);

    CHECK_THROWS_AS(ArmGuard(0, 20), std::invalid_argument);
    CHECK_THROWS_AS(ArmGuard(2, 0), std::invalid_argument);
    CHECK_THROWS_AS(g.record(7, 1), std::invalid_argument);
    CHECK_THROWS_AS(g.record(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(g.set_counts(0, -1, 0), std::invalid_argument);
}

TEST_CASE("bootstrap policy forces unproven arms in index order") {
    TreeBootstrapPolicy policy(one_flag_schema(), 3);
    Rng rng(5);
    ContextVector x{1.0};
    for (int i = 0; i < 5; ++i) CHECK(policy.select(x, rng) == 0);

    policy.update(x, 0, 1, rng);  // arm 0 proven
    CHECK(policy.select(x, rng) == 1);
    policy.update(x, 1, 1, rng);
    CHECK(policy.select(x, rng) == 2);
    policy.update(x, 2, 1, rng);

    // Everyone proven: selection is now scored, never out of range.
    for (int i = 0; i < 10; ++i) {
        int a = policy.select(x, rng);
        CHECK(a >= 0);
        CHECK(a <= 2);
    }

    // Eliminating every arm leaves nothing to play.
    policy.guard().set_counts(0, 0, 20);
    policy.guard().set_counts(1, 0, 20);
    policy.guard().set_counts(2, 0, 20);
    CHECK_THROWS_WITH_AS(policy.select(x, rng), "no playable arm", std::runtime_error);

    CHECK_THROWS_AS(TreeBootstrapPolicy(nullptr, 2), std::invalid_argument);
    CHECK_THROWS_AS(TreeBootstrapPolicy(one_flag_schema(), 1), std::invalid_argument);
}

TEST_CASE("bootstrap policy skips eliminated arms") {
    TreeBootstrapConfig cfg;
    cfg.failure_threshold = 3;
    TreeBootstrapPolicy policy(one_flag_schema(), 2, cfg);
    Rng rng(8);
    ContextVector x{0.0};
    for (int i = 0; i < 3; ++i) {
        CHECK(policy.select(x, rng) == 0);
        policy.update(x, 0, 0, rng);
    }
    CHECK(policy.guard().mode(0) == ArmGuard::Mode::eliminated);
    CHECK(policy.select(x, rng) == 1);  // forced
    policy.update(x, 1, 1, rng);
    for (int i = 0; i < 10; ++i) CHECK(policy.select(x, rng) == 1);  // scored, arm 0 gone
}

TEST_CASE("prior injection seeds empty arms with the first context") {
    TreeBootstrapConfig cfg;
    cfg.prior_injection = true;
    cfg.failure_threshold = 2;
    TreeBootstrapPolicy policy(one_flag_schema(), 3, cfg);
    Rng rng(9);
    ContextVector x{1.0};

    policy.update(x, 0, 1, rng);  // arm 0 already has real data
    CHECK(policy.arm_history_size(0) == 1);
    policy.select(x, rng);
    CHECK(policy.arm_history_size(0) == 1);  // untouched
    CHECK(policy.arm_history_size(1) == 2);  // one made-up success, one failure
    CHECK(policy.arm_history_size(2) == 2);

    // Injection happens once; later selects leave histories alone.
    policy.select(x, rng);
    CHECK(policy.arm_history_size(1) == 2);

    // Failures beyond the threshold never shut an arm out in this mode. Give
    // every arm a comparable record so arm 1 can still win a resample.
    for (int i = 0; i < 6; ++i) {
        policy.update(x, 0, 0, rng);
        policy.update(x, 1, 0, rng);
        policy.update(x, 2, 0, rng);
    }
    bool saw_arm1 = false;
    for (int i = 0; i < 200; ++i) saw_arm1 = saw_arm1 || policy.select(x, rng) == 1;
    CHECK(saw_arm1);
}

TEST_CASE("bootstrap selection matches the exact resampling law") {
    // All history at a single context: each arm's tree is one leaf, so the
    // resampled estimate is a scaled binomial and the exact selection
    // probability comes from the enumeration oracle.
    TreeBootstrapPolicy policy(one_flag_schema(), 2);
    Rng rng(77);
    ContextVector x{1.0};
    policy.update(x, 0, 1, rng);
    policy.update(x, 0, 0, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 0, rng);

    std::vector<double> exact = bootstrap_action_probs({{2, 0.5}, {3, 2.0 / 3.0}});
    CHECK(exact[0] == doctest::Approx(25.0 / 72.0));

    int draws = 40000;
    int arm0 = 0;
    for (int i = 0; i < draws; ++i) arm0 += policy.select(x, rng) == 0 ? 1 : 0;
    double freq = static_cast<double>(arm0) / draws;
    double se = std::sqrt(exact[0] * (1.0 - exact[0]) / draws);
    CHECK(std::abs(freq - exact[0]) < 3.5 * se);
}

TEST_CASE("heuristic policy refits on a doubling schedule") {
    TreeHeuristicPolicy policy(one_flag_schema(), 2);
    Rng rng(31);
    ContextVector x{0.0};
    std::vector<int64_t> expected{1, 2, 2, 4, 4, 4, 4, 8};
    for (int i = 0; i < 8; ++i) {
        policy.update(x, 0, i % 2, rng);
        CHECK(policy.last_refit_size(0) == expected[i]);
        CHECK(policy.arm_history_size(0) == i + 1);
    }
    // Observations between refits still reach the leaf counts.
    auto [n1, n0] = policy.tree(0).leaf_counts(x);
    CHECK(n1 + n0 == 8);
    CHECK(policy.last_refit_size(1) == 0);
    CHECK(policy.tree(1).leaf_counts(x) == std::pair<int64_t, int64_t>{0, 0});
}

TEST_CASE("heuristic selection follows the leaf posteriors") {
    TreeHeuristicPolicy policy(one_flag_schema(), 2);
    Rng rng(41);
    ContextVector x{1.0};
    policy.update(x, 0, 1, rng);
    policy.update(x, 0, 0, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 0, rng);

    // Leaf counts (1,1) and (2,1) with a unit prior give Beta(2,2) vs
    // Beta(3,2) draws; the quadrature oracle computes the win rate.
    std::vector<double> expected = ts_action_probs({{4, 0.5}, {5, 0.6}});
    CHECK(expected[0] == doctest::Approx(13.0 / 35.0).epsilon(1e-5));

    int draws = 60000;
    int arm0 = 0;
    for (int i = 0; i < draws; ++i) arm0 += policy.select(x, rng) == 0 ? 1 : 0;
    double freq = static_cast<double>(arm0) / draws;
    double se = std::sqrt(expected[0] * (1.0 - expected[0]) / draws);
    CHECK(std::abs(freq - expected[0]) < 3.5 * se);
}

TEST_CASE("a zero prior on an empty leaf is rejected") {
    TreeHeuristicConfig cfg;
    cfg.prior_successes = 0.0;
    cfg.prior_failures = 0.0;
    TreeHeuristicPolicy policy(one_flag_schema(), 2, cfg);
    Rng rng(3);
    ContextVector x{0.0};
    CHECK_THROWS_WITH_AS(policy.select(x, rng), "improper prior: Beta(0,0) draw", std::runtime_error);

    TreeHeuristicConfig bad;
    bad.prior_successes = -1.0;
    CHECK_THROWS_AS(TreeHeuristicPolicy(one_flag_schema(), 2, bad), std::invalid_argument);
}

TEST_CASE("context-free sampler matches the posterior win rate") {
    ContextFreeTsPolicy policy(2);
    Rng rng(55);
    ContextVector x{0.0};
    policy.update(x, 0, 1, rng);
    policy.update(x, 0, 0, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 1, rng);
    policy.update(x, 1, 0, rng);

    double expected = ts_action_probs({{4, 0.5}, {5, 0.6}})[0];  // Beta(2,2) vs Beta(3,2)
    int draws = 60000;
    int arm0 = 0;
    for (int i = 0; i < draws; ++i) arm0 += policy.select(x, rng) == 0 ? 1 : 0;
    double freq = static_cast<double>(arm0) / draws;
    double se = std::sqrt(expected * (1.0 - expected) / draws);
    CHECK(std::abs(freq - expected) < 3.5 * se);
    CHECK(policy.arm_history_size(1) == 3);
}

TEST_CASE("linear ucb scores have a closed form in one dimension") {
    LinUcbConfig cfg;
    cfg.tune_from = std::nullopt;
    LinUcbPolicy policy(identity_encoder(), 1, 2, cfg);
    ContextVector x{1.0};

    // Untouched arm: design I, response 0, so the mean is 0 and the width 1.
    std::vector<double> s0 = policy.scores(x);
    CHECK(s0[0] == doctest::Approx(1.0));
    CHECK(s0[1] == doctest::Approx(1.0));

    Rng rng(2);
    policy.update(x, 0, 1, rng);
    CHECK(policy.design(0) == std::vector<double>{2.0});
    CHECK(policy.response(0) == std::vector<double>{1.0});
    CHECK(policy.design(1) == std::vector<double>{1.0});

    // theta = 1/(2+1), width = sqrt(1/2).
    std::vector<double> s1 = policy.scores(x);
    CHECK(s1[0] == doctest::Approx(1.0 / 3.0 + 1.0 / std::sqrt(2.0)));
    CHECK(s1[1] == doctest::Approx(1.0));

    // The rewarded arm now scores higher and wins the argmax.
    CHECK(policy.select(x, rng) == 0);
}

TEST_CASE("linear ucb retunes its ridge weight only at history doublings") {
    LinUcbConfig cfg;
    cfg.tune_from = 4;
    LinUcbPolicy policy(identity_encoder(), 2, 2, cfg);
    Rng rng(13);
    std::vector<int> change_points;
    double last = policy.ridge(0);
    for (int t = 1; t <= 40; ++t) {
        ContextVector x{static_cast<double>(t % 5) / 5.0, 1.0};
        policy.update(x, 0, t % 3 == 0 ? 1 : 0, rng);
        if (policy.ridge(0) != last) {
            change_points.push_back(t);
            last = policy.ridge(0);
        }
    }
    for (int t : change_points) {
        bool at_doubling = t == 4 || t == 8 || t == 16 || t == 32;
        CHECK(at_doubling);
    }
    bool in_grid = false;
    for (double g : cfg.ridge_grid) in_grid = in_grid || policy.ridge(0) == g;
    CHECK(in_grid);
    CHECK(policy.ridge(1) == cfg.ridge);  // untouched arm keeps the default
}

TEST_CASE("linear ucb rejects bad configs and encoders") {
    CHECK_THROWS_AS(LinUcbPolicy(nullptr, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(LinUcbPolicy(identity_encoder(), 0, 2), std::invalid_argument);
    LinUcbConfig bad;
    bad.alpha = -1.0;
    CHECK_THROWS_AS(LinUcbPolicy(identity_encoder(), 1, 2, bad), std::invalid_argument);
    bad = LinUcbConfig{};
    bad.ridge = 0.0;
    CHECK_THROWS_AS(LinUcbPolicy(identity_encoder(), 1, 2, bad), std::invalid_argument);
    bad = LinUcbConfig{};
    bad.ridge_grid = {1.0, -2.0};
    CHECK_THROWS_AS(LinUcbPolicy(identity_encoder(), 1, 2, bad), std::invalid_argument);

    LinUcbPolicy policy(identity_encoder(), 2, 2);
    Rng rng(1);
    CHECK_THROWS_AS(policy.update({1.0}, 0, 1, rng), std::invalid_argument);  // encoder output too short
    CHECK_THROWS_AS(policy.update({1.0, 2.0}, 5, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(policy.update({1.0, 2.0}, 0, 3, rng), std::invalid_argument);
}

TEST_CASE("logistic ucb radius closed form and argument checks") {
    double expected = std::sqrt(2.0 * std::log(8.0) * std::log(8.0 * 100.0 / 0.05));
    CHECK(logistic_ucb_radius(2, 8, 100, 0.05) == doctest::Approx(expected));
    CHECK_THROWS_AS(logistic_ucb_radius(0, 8, 100, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(logistic_ucb_radius(2, 0, 100, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(logistic_ucb_radius(2, 8, 0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(logistic_ucb_radius(2, 8, 100, 1.5), std::invalid_argument);
}

TEST_CASE("logistic ucb tries every arm twice, then exploits") {
    LogisticUcbConfig cfg;
    cfg.alpha = 0.1;
    cfg.tune_from = std::nullopt;
    LogisticUcbPolicy policy(identity_encoder(), 1, 2, cfg);
    Rng rng(6);
    ContextVector x{1.0};

    std::vector<double> s = policy.scores(x);
    CHECK(s[0] == std::numeric_limits<double>::infinity());
    CHECK(s[1] == std::numeric_limits<double>::infinity());

    for (int t = 0; t < 60; ++t) {
        int a = policy.select(x, rng);
        policy.update(x, a, a == 0 ? 1 : 0, rng);
    }
    CHECK(policy.arm_history_size(0) >= 2);
    CHECK(policy.arm_history_size(1) >= 2);
    CHECK(policy.arm_history_size(0) > 2 * policy.arm_history_size(1));
    CHECK(policy.theta(0)[0] > 0.0);
    CHECK(policy.theta(1)[0] < 0.0);
    CHECK(std::isfinite(policy.scores(x)[0]));
}

TEST_CASE("logistic fit surfaces convergence failures") {
    LogisticUcbConfig cfg;
    cfg.max_newton_iters = 1;
    cfg.tune_from = std::nullopt;
    LogisticUcbPolicy policy(identity_encoder(), 1, 2, cfg);
    Rng rng(4);
    CHECK_THROWS_WITH_AS(policy.update({1.0}, 0, 1, rng), "numerical failure: logistic fit did not converge",
                         std::runtime_error);
}

TEST_CASE("offline fit splits holdout and freezes the trees") {
    Rng data_rng(70);
    auto schema = std::make_shared<FeatureSchema>(
        std::vector<Feature>{{"u", FeatureKind::continuous, {}}, {"v", FeatureKind::continuous, {}}});
    ClassificationTable table;
    table.schema = schema;
    table.class_names = {"left", "right", "top"};
    table.class_counts = {0, 0, 0};
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 120; ++i) {
        double u = unif(data_rng), v = unif(data_rng);
        int label = v > 0.66 ? 2 : (u < 0.5 ? 0 : 1);
        table.rows.push_back({u, v});
        table.labels.push_back(label);
        ++table.class_counts[label];
    }

    Rng fit_rng(71);
    OfflineFit fit = offline_tree_fit(table, 30, CartConfig{}, fit_rng);
    CHECK(fit.holdout.rows.size() == 30);
    CHECK(fit.holdout.labels.size() == 30);
    int64_t train_total = 0, holdout_total = 0;
    for (int k = 0; k < 3; ++k) {
        train_total += fit.policy->arm_history_size(k);
        holdout_total += fit.holdout.class_counts[k];
        CHECK(fit.policy->arm_history_size(k) + fit.holdout.class_counts[k] == table.class_counts[k]);
    }
    CHECK(train_total == 90);
    CHECK(holdout_total == 30);

    // The frozen policy classifies the held-out rows well on separable data.
    Rng sel_rng(72);
    int correct = 0;
    for (std::size_t i = 0; i < fit.holdout.rows.size(); ++i)
        correct += fit.policy->select(fit.holdout.rows[i], sel_rng) == fit.holdout.labels[i] ? 1 : 0;
    CHECK(static_cast<double>(correct) / 30.0 >= 0.8);

    // update() is a no-op: predictions do not move.
    ContextVector probe{0.2, 0.2};
    double before = fit.policy->tree(0).predict(probe);
    Rng up_rng(73);
    fit.policy->update(probe, 0, 0, up_rng);
    CHECK(fit.policy->tree(0).predict(probe) == before);

    CHECK_THROWS_WITH_AS(offline_tree_fit(table, 120, CartConfig{}, fit_rng), "holdout leaves no training rows",
                         std::invalid_argument);
    CHECK_THROWS_AS(offline_tree_fit(table, -1, CartConfig{}, fit_rng), std::invalid_argument);
}
