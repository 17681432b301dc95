#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "treebandit/environments.hpp"
#include "treebandit/features.hpp"
#include "treebandit/tree.hpp"
#include "treebandit/util.hpp"

namespace treebandit {

class Policy {
  public:
    virtual ~Policy() = default;
    virtual int num_actions() const = 0;
    virtual int select(const ContextVector& x, Rng& rng) = 0;
    virtual void update(const ContextVector& x, int action, int reward, Rng& rng) = 0;
    virtual int64_t arm_history_size(int action) const = 0;
};

// Exploration bookkeeping for arms without a recorded success: such arms are
// forced (played before any scored arm) until they either succeed once or,
// when a threshold is set, fail that many times and are eliminated.
class ArmGuard {
  public:
    enum class Mode { forced, free, eliminated };

    ArmGuard(int num_actions, std::optional<int64_t> failure_threshold);

    Mode mode(int action) const;
    std::optional<int> forced_action() const;  // lowest-indexed forced arm
    void record(int action, int reward);

    int64_t successes(int action) const;
    int64_t failures(int action) const;
    void set_counts(int action, int64_t successes, int64_t failures);

  private:
    void check(int action) const;

    std::optional<int64_t> threshold_;
    std::vector<int64_t> successes_;
    std::vector<int64_t> failures_;
};

struct TreeBootstrapConfig {
    CartConfig cart;
    // Forced-exploration failure budget; nullopt keeps unlucky arms forever.
    std::optional<int64_t> failure_threshold = 20;
    // Replaces forced exploration: seed every empty arm with one fabricated
    // success and one fabricated failure at the first context seen.
    bool prior_injection = false;
};

// Bootstrap approximation of posterior sampling: each arm refits a tree on a
// with-replacement resample of its history and the best prediction wins.
class TreeBootstrapPolicy final : public Policy {
  public:
    TreeBootstrapPolicy(SchemaPtr schema, int num_actions, TreeBootstrapConfig config = {});

    int num_actions() const override { return static_cast<int>(arms_.size()); }
    int select(const ContextVector& x, Rng& rng) override;
    void update(const ContextVector& x, int action, int reward, Rng& rng) override;
    int64_t arm_history_size(int action) const override;

    ArmGuard& guard() { return guard_; }
    const ArmGuard& guard() const { return guard_; }

  private:
    double resample_prediction(const ActionDataset& data, const ContextVector& x, Rng& rng) const;

    TreeBootstrapConfig config_;
    std::vector<ActionDataset> arms_;
    ArmGuard guard_;
    bool injected_ = false;
};

struct TreeHeuristicConfig {
    CartConfig cart;
    double prior_successes = 1.0;
    double prior_failures = 1.0;
};

// Thompson sampling on leaf posteriors: one tree per arm, Beta draws from the
// counts of the leaf the context lands in, trees refit on a doubling schedule.
class TreeHeuristicPolicy final : public Policy {
  public:
    TreeHeuristicPolicy(SchemaPtr schema, int num_actions, TreeHeuristicConfig config = {});

    int num_actions() const override { return static_cast<int>(arms_.size()); }
    int select(const ContextVector& x, Rng& rng) override;
    void update(const ContextVector& x, int action, int reward, Rng& rng) override;
    int64_t arm_history_size(int action) const override;

    const DecisionTree& tree(int action) const;
    int64_t last_refit_size(int action) const;

  private:
    struct Arm {
        ActionDataset data;
        DecisionTree tree;
        int64_t last_refit = 0;
    };

    TreeHeuristicConfig config_;
    std::vector<Arm> arms_;
};

// Context-blind Thompson sampling with Beta(s+1, n-s+1) posteriors.
class ContextFreeTsPolicy final : public Policy {
  public:
    explicit ContextFreeTsPolicy(int num_actions);

    int num_actions() const override { return static_cast<int>(pulls_.size()); }
    int select(const ContextVector& x, Rng& rng) override;
    void update(const ContextVector& x, int action, int reward, Rng& rng) override;
    int64_t arm_history_size(int action) const override { return pulls_.at(action); }

  private:
    std::vector<int64_t> pulls_;
    std::vector<int64_t> wins_;
};

using ContextEncoder = std::function<std::vector<double>(const ContextVector&)>;

struct LinUcbConfig {
    double alpha = 1.0;
    double ridge = 1.0;
    // Retune the ridge weight by 5-fold cross-validation once an arm holds
    // this many rows, and again each time its history doubles. Set to nullopt
    // to keep the fixed value above.
    std::optional<int64_t> tune_from = 10;
    std::vector<double> ridge_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
};

// Linear UCB over encoded contexts: ridge estimate plus a confidence width.
class LinUcbPolicy final : public Policy {
  public:
    LinUcbPolicy(ContextEncoder encoder, int dim, int num_actions, LinUcbConfig config = {});

    int num_actions() const override { return static_cast<int>(arms_.size()); }
    int select(const ContextVector& x, Rng& rng) override;
    void update(const ContextVector& x, int action, int reward, Rng& rng) override;
    int64_t arm_history_size(int action) const override;

    std::vector<double> scores(const ContextVector& x) const;
    const std::vector<double>& design(int action) const;    // row-major d*d, starts as identity
    const std::vector<double>& response(int action) const;  // length d
    double ridge(int action) const;

  private:
    struct Arm {
        std::vector<double> design;    // I + sum of outer products
        std::vector<double> response;  // sum of reward-weighted rows
        std::vector<double> xs;        // flattened history rows for tuning
        std::vector<double> ys;
        double ridge = 1.0;
        int64_t last_tune = 0;
    };

    double arm_score(const Arm& arm, const std::vector<double>& v) const;
    void maybe_tune(Arm& arm, Rng& rng);

    ContextEncoder encoder_;
    int dim_;
    LinUcbConfig config_;
    std::vector<Arm> arms_;
};

struct LogisticUcbConfig {
    double alpha = 1.0;
    int64_t horizon = 10000;  // enters the confidence radius
    double delta = 0.05;
    double ridge = 1.0;
    std::optional<int64_t> tune_from = 10;
    std::vector<double> ridge_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    int64_t refit_every_until = 100;  // refit every update below this size, then on doubling
    int max_newton_iters = 100;
};

// sqrt(dim * ln(pulls) * ln(pulls * horizon / delta)); the width multiplier.
double logistic_ucb_radius(int dim, int64_t pulls, int64_t horizon, double delta);

// UCB over a regularized logistic model per arm; arms with fewer than two
// pulls score infinitely high so every arm is tried twice.
class LogisticUcbPolicy final : public Policy {
  public:
    LogisticUcbPolicy(ContextEncoder encoder, int dim, int num_actions, LogisticUcbConfig config = {});

    int num_actions() const override { return static_cast<int>(arms_.size()); }
    int select(const ContextVector& x, Rng& rng) override;
    void update(const ContextVector& x, int action, int reward, Rng& rng) override;
    int64_t arm_history_size(int action) const override;

    std::vector<double> scores(const ContextVector& x) const;
    const std::vector<double>& theta(int action) const;
    double ridge(int action) const;

  private:
    struct Arm {
        std::vector<double> design;  // I + sum of outer products
        std::vector<double> theta;
        std::vector<double> xs;
        std::vector<double> ys;
        double ridge = 1.0;
        int64_t last_refit = 0;
    };

    void refit(Arm& arm, Rng& rng);

    ContextEncoder encoder_;
    int dim_;
    LogisticUcbConfig config_;
    std::vector<Arm> arms_;
};

// Frozen one-vs-rest trees fit offline; select is the argmax prediction.
class OfflineTreePolicy final : public Policy {
  public:
    OfflineTreePolicy(std::vector<DecisionTree> trees, std::vector<int64_t> class_counts);

    int num_actions() const override { return static_cast<int>(trees_.size()); }
    int select(const ContextVector& x, Rng& rng) override;
    void update(const ContextVector&, int, int, Rng&) override {}  // frozen
    int64_t arm_history_size(int action) const override { return counts_.at(action); }

    const DecisionTree& tree(int action) const { return trees_.at(action); }

  private:
    std::vector<DecisionTree> trees_;
    std::vector<int64_t> counts_;
};

struct OfflineFit {
    std::unique_ptr<OfflineTreePolicy> policy;
    ClassificationTable holdout;
};

// Splits off a uniform without-replacement holdout, fits one-vs-rest trees on
// the remainder, and returns the frozen policy with the held-out rows.
OfflineFit offline_tree_fit(const ClassificationTable& table, int64_t holdout_size, const CartConfig& config,
                            Rng& rng);

}  // namespace treebandit
