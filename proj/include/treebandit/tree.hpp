#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treebandit/features.hpp"

namespace treebandit {

// Binary split. Continuous: left iff value <= threshold.
// Categorical: left iff the level's bit is set in left_levels.
struct SplitRule {
    int feature = -1;
    double threshold = 0.0;
    uint64_t left_levels = 0;
};

struct TreeNode {
    SplitRule split;
    int32_t left = -1;  // leaf iff left < 0
    int32_t right = -1;
    int64_t n1 = 0;
    int64_t n0 = 0;
    double p_hat = 0.5;

    bool is_leaf() const { return left < 0; }
};

struct CartConfig {
    int min_leaf_size = 5;
    int cv_folds = 10;
    // Per-row Brier cost per extra leaf; ascending, starts at 0.
    std::vector<double> complexity_grid = {0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2};

    void validate() const;
};

class DecisionTree {
public:
    DecisionTree() = default;
    static DecisionTree single_leaf(SchemaPtr schema);

    const SchemaPtr& schema() const { return schema_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    int leaf_count() const;
    int depth() const;

    int route(const ContextVector& x) const;  // leaf node index
    double predict(const ContextVector& x) const;
    std::pair<int64_t, int64_t> leaf_counts(const ContextVector& x) const;

    // Adds one observation to the routed leaf; structure unchanged.
    void observe(const ContextVector& x, int reward);

    std::string dump() const;

private:
    SchemaPtr schema_;
    std::vector<TreeNode> nodes_;  // nodes_[0] is the root

    friend DecisionTree fit_cart_weighted(const ActionDataset&, std::span<const uint32_t>,
                                          std::span<const uint32_t>, const CartConfig&, Rng&);
    friend DecisionTree parse_tree(const FeatureSchema&, const std::vector<std::string>&, SchemaPtr);
};

// Grows a Gini CART to min_leaf_size, then cost-complexity prunes at the
// level chosen by k-fold cross-validation with the one-standard-error rule.
DecisionTree fit_cart(const ActionDataset& data, const CartConfig& config, Rng& rng);

// Same fit over a weighted multiset: rows[i] taken with multiplicity weights[i].
DecisionTree fit_cart_weighted(const ActionDataset& data, std::span<const uint32_t> rows,
                               std::span<const uint32_t> weights, const CartConfig& config, Rng& rng);

// Parses the dump() format. Leaf lines may carry counts ("leaf N1=3 N0=1 p=0.75")
// or a bare probability ("leaf p=0.75").
DecisionTree parse_tree(const FeatureSchema& schema, const std::vector<std::string>& lines,
                        SchemaPtr shared = nullptr);

}  // namespace treebandit
