#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "treebandit/features.hpp"
#include "treebandit/tree.hpp"
#include "treebandit/util.hpp"

namespace treebandit {

// Ground truth for a simulated bandit: one reward-probability tree per action.
struct TruthSpec {
    SchemaPtr schema;
    std::vector<std::string> action_names;
    std::vector<DecisionTree> trees;
};

TruthSpec parse_truth(const std::string& text);
TruthSpec load_truth(const std::string& path);
// Built-in 4-feature, 4-action activity-preference simulation.
TruthSpec default_sports_truth();

class BanditEnvironment {
  public:
    virtual ~BanditEnvironment() = default;
    virtual SchemaPtr schema() const = 0;
    virtual int num_actions() const = 0;
    virtual const std::vector<std::string>& action_names() const = 0;
    // Draws the next context; for data-backed environments this advances a cursor.
    virtual ContextVector next_context(Rng& rng) = 0;
    // Bernoulli reward for playing `action` against the most recently drawn context.
    virtual int realize_reward(const ContextVector& x, int action, Rng& rng) = 0;
    // Per-action success probabilities for the most recently drawn context.
    virtual std::vector<double> oracle_probs(const ContextVector& x) const = 0;
    // Rows for batch statistics of linear encoders; null for synthetic environments.
    virtual const std::vector<ContextVector>* encoding_rows() const { return nullptr; }
};

std::unique_ptr<BanditEnvironment> make_simulated_env(TruthSpec truth);

// Supervised dataset recast as a bandit: actions are classes, reward 1 iff correct.
struct ClassificationTable {
    SchemaPtr schema;
    std::vector<ContextVector> rows;
    std::vector<int> labels;  // dense, 0-based, aligned with rows
    std::vector<std::string> class_names;
    std::vector<int64_t> class_counts;

    int num_classes() const { return static_cast<int>(class_names.size()); }
};

std::unique_ptr<BanditEnvironment> make_classification_env(std::shared_ptr<const ClassificationTable> table,
                                                           std::uint64_t shuffle_seed);

// Reads a CSV with a header row against a schema declaration file.
// Classes rarer than cutoff (as a fraction of rows) are dropped, then labels
// are re-densified in order of first appearance.
ClassificationTable ingest_csv(const std::string& csv_path, const std::string& schema_path,
                               double rare_class_cutoff = 0.0005);

// Maps contexts to numeric vectors for linear policies: one indicator per
// categorical level, continuous features standardized with batch statistics.
// Zero-variance continuous features are dropped (reported via dropped()).
class LinearEncoding {
  public:
    LinearEncoding() = default;
    static LinearEncoding fit(const FeatureSchema& schema, const std::vector<ContextVector>* rows);

    std::vector<double> encode(const ContextVector& x) const;
    int dim() const { return dim_; }
    const std::vector<std::string>& dropped() const { return dropped_; }

  private:
    struct Slot {
        int feature = -1;
        bool categorical = false;
        int offset = 0;   // first output index for this feature
        int levels = 0;   // categorical only
        double mean = 0.0;
        double scale = 1.0;
    };
    std::vector<Slot> slots_;
    std::vector<std::string> dropped_;
    int dim_ = 0;
    int schema_dim_ = 0;
};

}  // namespace treebandit
