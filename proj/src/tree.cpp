#include "treebandit/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace treebandit {

namespace {

constexpr double kMinGain = 1e-12;

struct Item {
    uint32_t row;
    uint32_t w;
    int16_t fold;
};

double impurity(double n, double n1) {
    if (n <= 0) return 0.0;
    double p = n1 / n;
    return 2.0 * p * (1.0 - p);
}

double split_gain(double n, double n1, double nl, double n1l) {
    double nr = n - nl;
    double n1r = n1 - n1l;
    return impurity(n, n1) - (nl / n) * impurity(nl, n1l) - (nr / n) * impurity(nr, n1r);
}

struct BestSplit {
    bool found = false;
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    uint64_t left_levels = 0;
};

class Grower {
public:
    Grower(const ActionDataset& data, int min_leaf) : data_(data), min_leaf_(min_leaf) {}

    std::vector<TreeNode> grow(std::vector<Item>& items) {
        nodes_.clear();
        build(items, 0, items.size());
        return std::move(nodes_);
    }

private:
    const ActionDataset& data_;
    int min_leaf_;
    std::vector<TreeNode> nodes_;
    std::vector<std::pair<double, uint64_t>> scratch_;  // (value, packed w/wy)

    int32_t build(std::vector<Item>& items, std::size_t lo, std::size_t hi) {
        int64_t n = 0, n1 = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            n += items[i].w;
            n1 += static_cast<int64_t>(items[i].w) * data_.reward(items[i].row);
        }
        int32_t idx = static_cast<int32_t>(nodes_.size());
        nodes_.push_back(TreeNode{});
        nodes_[idx].n1 = n1;
        nodes_[idx].n0 = n - n1;
        nodes_[idx].p_hat = n > 0 ? static_cast<double>(n1) / static_cast<double>(n) : 0.5;

        if (n1 == 0 || n1 == n || n < 2 * static_cast<int64_t>(min_leaf_)) return idx;

        BestSplit best = find_split(items, lo, hi, n, n1);
        if (!best.found) return idx;

        const FeatureSchema& schema = *data_.schema();
        auto goes_left = [&](const Item& it) {
            double v = data_.value(it.row, best.feature);
            if (schema.feature(best.feature).kind == FeatureKind::continuous) return v <= best.threshold;
            return ((best.left_levels >> static_cast<uint64_t>(v)) & 1ULL) != 0;
        };
        auto mid = std::stable_partition(items.begin() + lo, items.begin() + hi, goes_left) - items.begin();

        nodes_[idx].split.feature = best.feature;
        nodes_[idx].split.threshold = best.threshold;
        nodes_[idx].split.left_levels = best.left_levels;
        int32_t l = build(items, lo, mid);
        int32_t r = build(items, mid, hi);
        nodes_[idx].left = l;
        nodes_[idx].right = r;
        return idx;
    }

    BestSplit find_split(const std::vector<Item>& items, std::size_t lo, std::size_t hi, int64_t n, int64_t n1) {
        BestSplit best;
        const FeatureSchema& schema = *data_.schema();
        for (int f = 0; f < schema.dimension(); ++f) {
            if (schema.feature(f).kind == FeatureKind::categorical)
                scan_categorical(items, lo, hi, f, n, n1, best);
            else
                scan_continuous(items, lo, hi, f, n, n1, best);
        }
        return best;
    }

    void consider(BestSplit& best, double gain, int feature, double threshold, uint64_t left_levels) {
        if (gain <= kMinGain) return;
        if (best.found && gain <= best.gain) return;
        best.found = true;
        best.gain = gain;
        best.feature = feature;
        best.threshold = threshold;
        best.left_levels = left_levels;
    }

    void scan_categorical(const std::vector<Item>& items, std::size_t lo, std::size_t hi, int f, int64_t n,
                          int64_t n1, BestSplit& best) {
        int L = static_cast<int>(data_.schema()->feature(f).levels.size());
        int64_t cnt[64] = {0};
        int64_t pos[64] = {0};
        for (std::size_t i = lo; i < hi; ++i) {
            int lvl = static_cast<int>(data_.value(items[i].row, f));
            cnt[lvl] += items[i].w;
            pos[lvl] += static_cast<int64_t>(items[i].w) * data_.reward(items[i].row);
        }
        // Ordered-level trick: sort present levels by success rate, then only
        // prefix subsets need scanning for the optimal Gini partition.
        int order[64];
        int m = 0;
        for (int l = 0; l < L; ++l)
            if (cnt[l] > 0) order[m++] = l;
        if (m < 2) return;
        std::sort(order, order + m, [&](int a, int b) {
            double ra = static_cast<double>(pos[a]) * cnt[b];
            double rb = static_cast<double>(pos[b]) * cnt[a];
            if (ra != rb) return ra < rb;
            return a < b;
        });
        int64_t nl = 0, n1l = 0;
        uint64_t mask = 0;
        for (int k = 0; k < m - 1; ++k) {
            nl += cnt[order[k]];
            n1l += pos[order[k]];
            mask |= 1ULL << order[k];
            if (nl < min_leaf_ || n - nl < min_leaf_) continue;
            consider(best, split_gain(static_cast<double>(n), static_cast<double>(n1), static_cast<double>(nl),
                                      static_cast<double>(n1l)),
                     f, 0.0, mask);
        }
    }

    void scan_continuous(const std::vector<Item>& items, std::size_t lo, std::size_t hi, int f, int64_t n,
                         int64_t n1, BestSplit& best) {
        scratch_.clear();
        for (std::size_t i = lo; i < hi; ++i) {
            uint64_t packed = (static_cast<uint64_t>(items[i].w) << 1) |
                              static_cast<uint64_t>(data_.reward(items[i].row));
            scratch_.emplace_back(data_.value(items[i].row, f), packed);
        }
        std::sort(scratch_.begin(), scratch_.end());
        int64_t nl = 0, n1l = 0;
        std::size_t i = 0;
        while (i < scratch_.size()) {
            double v = scratch_[i].first;
            while (i < scratch_.size() && scratch_[i].first == v) {
                int64_t w = static_cast<int64_t>(scratch_[i].second >> 1);
                nl += w;
                n1l += (scratch_[i].second & 1) ? w : 0;
                ++i;
            }
            if (i == scratch_.size()) break;
            if (nl < min_leaf_ || n - nl < min_leaf_) continue;
            double threshold = v + 0.5 * (scratch_[i].first - v);
            consider(best, split_gain(static_cast<double>(n), static_cast<double>(n1), static_cast<double>(nl),
                                      static_cast<double>(n1l)),
                     f, threshold, 0);
        }
    }
};

// Marks which internal nodes survive pruning at the given per-row complexity
// cost; returns (per-row Brier risk, leaf count) of the pruned subtree.
struct RiskLeaves {
    double risk = 0.0;
    int leaves = 0;
};

RiskLeaves prune_marks(const std::vector<TreeNode>& nodes, int32_t i, double alpha, double inv_n,
                       std::vector<uint8_t>& keep) {
    const TreeNode& t = nodes[i];
    double n = static_cast<double>(t.n1 + t.n0);
    double leaf_risk = n > 0 ? static_cast<double>(t.n1) * static_cast<double>(t.n0) / n * inv_n : 0.0;
    if (t.is_leaf()) return {leaf_risk, 1};
    RiskLeaves l = prune_marks(nodes, t.left, alpha, inv_n, keep);
    RiskLeaves r = prune_marks(nodes, t.right, alpha, inv_n, keep);
    double sub_risk = l.risk + r.risk;
    int sub_leaves = l.leaves + r.leaves;
    if (leaf_risk - sub_risk <= alpha * (sub_leaves - 1) + 1e-15) {
        keep[i] = 0;
        return {leaf_risk, 1};
    }
    keep[i] = 1;
    return {sub_risk, sub_leaves};
}

int32_t rebuild_pruned(const std::vector<TreeNode>& nodes, const std::vector<uint8_t>& keep, int32_t i,
                       std::vector<TreeNode>& out) {
    int32_t idx = static_cast<int32_t>(out.size());
    out.push_back(nodes[i]);
    if (nodes[i].is_leaf() || !keep[i]) {
        out[idx].left = out[idx].right = -1;
        out[idx].split = SplitRule{};
        return idx;
    }
    int32_t l = rebuild_pruned(nodes, keep, nodes[i].left, out);
    int32_t r = rebuild_pruned(nodes, keep, nodes[i].right, out);
    out[idx].left = l;
    out[idx].right = r;
    return idx;
}

int route_marked(const std::vector<TreeNode>& nodes, const std::vector<uint8_t>& keep, const ActionDataset& data,
                 uint32_t row, const FeatureSchema& schema) {
    int i = 0;
    while (!nodes[i].is_leaf() && keep[i]) {
        const SplitRule& s = nodes[i].split;
        double v = data.value(row, s.feature);
        bool left = schema.feature(s.feature).kind == FeatureKind::continuous
                        ? v <= s.threshold
                        : ((s.left_levels >> static_cast<uint64_t>(v)) & 1ULL);
        i = left ? nodes[i].left : nodes[i].right;
    }
    return i;
}

}  // namespace

void CartConfig::validate() const {
    if (min_leaf_size < 1) throw std::invalid_argument("min_leaf_size must be >= 1");
    if (complexity_grid.empty()) throw std::invalid_argument("complexity_grid must be non-empty");
    if (complexity_grid.front() != 0.0) throw std::invalid_argument("complexity_grid must start at 0");
    for (std::size_t i = 0; i + 1 < complexity_grid.size(); ++i)
        if (complexity_grid[i] >= complexity_grid[i + 1])
            throw std::invalid_argument("complexity_grid must be strictly ascending");
}

DecisionTree fit_cart(const ActionDataset& data, const CartConfig& config, Rng& rng) {
    if (data.size() == 0) throw std::invalid_argument("empty training set");
    std::vector<uint32_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0u);
    return fit_cart_weighted(data, rows, {}, config, rng);
}

DecisionTree fit_cart_weighted(const ActionDataset& data, std::span<const uint32_t> rows,
                               std::span<const uint32_t> weights, const CartConfig& config, Rng& rng) {
    config.validate();
    if (rows.empty()) throw std::invalid_argument("empty training set");
    if (!weights.empty() && weights.size() != rows.size())
        throw std::invalid_argument("rows and weights differ in length");

    int64_t total = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) total += weights.empty() ? 1 : weights[i];
    if (total == 0) throw std::invalid_argument("empty training set");

    int folds = std::min<int64_t>(config.cv_folds, total);

    // Deal every training unit into a fold independently and uniformly.
    std::vector<Item> items;
    items.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        uint32_t w = weights.empty() ? 1 : weights[i];
        if (w == 0) continue;
        if (folds < 2) {
            items.push_back({rows[i], w, 0});
        } else if (w == 1) {
            items.push_back({rows[i], 1, static_cast<int16_t>(std::uniform_int_distribution<int>(0, folds - 1)(rng))});
        } else {
            uint32_t rem = w;
            for (int f = 0; f < folds - 1 && rem > 0; ++f) {
                double p = 1.0 / static_cast<double>(folds - f);
                uint32_t take = std::binomial_distribution<uint32_t>(rem, p)(rng);
                if (take > 0) items.push_back({rows[i], take, static_cast<int16_t>(f)});
                rem -= take;
            }
            if (rem > 0) items.push_back({rows[i], rem, static_cast<int16_t>(folds - 1)});
        }
    }

    Grower grower(data, config.min_leaf_size);
    const FeatureSchema& schema = *data.schema();
    const auto& grid = config.complexity_grid;

    double alpha_star = grid.front();
    if (folds >= 2 && grid.size() > 1) {
        std::vector<double> cv_loss(grid.size(), 0.0);
        std::vector<double> cv_weight(grid.size(), 0.0);
        std::vector<std::vector<double>> fold_means(grid.size());

        std::vector<Item> train;
        for (int f = 0; f < folds; ++f) {
            train.clear();
            int64_t test_weight = 0;
            for (const Item& it : items) {
                if (it.fold == f)
                    test_weight += it.w;
                else
                    train.push_back(it);
            }
            if (train.empty() || test_weight == 0) continue;

            std::vector<TreeNode> ft = grower.grow(train);
            std::vector<uint8_t> keep(ft.size(), 1);
            double inv_n = 1.0 / static_cast<double>(ft[0].n1 + ft[0].n0);
            for (std::size_t j = 0; j < grid.size(); ++j) {
                prune_marks(ft, 0, grid[j], inv_n, keep);
                double loss = 0.0;
                for (const Item& it : items) {
                    if (it.fold != f) continue;
                    int leaf = route_marked(ft, keep, data, it.row, schema);
                    double p = ft[leaf].p_hat;
                    double y = data.reward(it.row);
                    loss += static_cast<double>(it.w) * (y - p) * (y - p);
                }
                cv_loss[j] += loss;
                cv_weight[j] += static_cast<double>(test_weight);
                fold_means[j].push_back(loss / static_cast<double>(test_weight));
            }
        }

        std::size_t usable = fold_means[0].size();
        if (usable >= 2) {
            std::vector<double> cv(grid.size());
            for (std::size_t j = 0; j < grid.size(); ++j) cv[j] = cv_loss[j] / cv_weight[j];
            std::size_t jmin = 0;
            for (std::size_t j = 1; j < grid.size(); ++j)
                if (cv[j] < cv[jmin]) jmin = j;
            double mean = 0.0;
            for (double m : fold_means[jmin]) mean += m;
            mean /= static_cast<double>(usable);
            double var = 0.0;
            for (double m : fold_means[jmin]) var += (m - mean) * (m - mean);
            double se = std::sqrt(var / static_cast<double>(usable - 1)) / std::sqrt(static_cast<double>(usable));
            double limit = cv[jmin] + se;
            for (std::size_t j = 0; j < grid.size(); ++j)
                if (cv[j] <= limit) alpha_star = grid[j];
        }
    }

    std::vector<TreeNode> full = grower.grow(items);
    std::vector<uint8_t> keep(full.size(), 1);
    double inv_n = 1.0 / static_cast<double>(full[0].n1 + full[0].n0);
    prune_marks(full, 0, alpha_star, inv_n, keep);

    DecisionTree tree;
    tree.schema_ = data.schema();
    rebuild_pruned(full, keep, 0, tree.nodes_);
    return tree;
}

DecisionTree DecisionTree::single_leaf(SchemaPtr schema) {
    DecisionTree t;
    t.schema_ = std::move(schema);
    t.nodes_.push_back(TreeNode{});
    return t;
}

int DecisionTree::leaf_count() const {
    int c = 0;
    for (const auto& n : nodes_) c += n.is_leaf();
    return c;
}

int DecisionTree::depth() const {
    std::vector<std::pair<int32_t, int>> stack{{0, 0}};
    int d = 0;
    while (!stack.empty()) {
        auto [i, di] = stack.back();
        stack.pop_back();
        d = std::max(d, di);
        if (!nodes_[i].is_leaf()) {
            stack.push_back({nodes_[i].left, di + 1});
            stack.push_back({nodes_[i].right, di + 1});
        }
    }
    return d;
}

int DecisionTree::route(const ContextVector& x) const {
    if (nodes_.empty()) throw std::runtime_error("routing in an empty tree");
    validate_context(*schema_, x);
    int i = 0;
    while (!nodes_[i].is_leaf()) {
        const SplitRule& s = nodes_[i].split;
        bool left = schema_->feature(s.feature).kind == FeatureKind::continuous
                        ? x[s.feature] <= s.threshold
                        : ((s.left_levels >> static_cast<uint64_t>(x[s.feature])) & 1ULL);
        i = left ? nodes_[i].left : nodes_[i].right;
    }
    return i;
}

double DecisionTree::predict(const ContextVector& x) const { return nodes_[route(x)].p_hat; }

std::pair<int64_t, int64_t> DecisionTree::leaf_counts(const ContextVector& x) const {
    const TreeNode& n = nodes_[route(x)];
    return {n.n1, n.n0};
}

void DecisionTree::observe(const ContextVector& x, int reward) {
    if (reward != 0 && reward != 1) throw std::invalid_argument("reward must be 0 or 1");
    TreeNode& n = nodes_[route(x)];
    n.n1 += reward;
    n.n0 += 1 - reward;
    n.p_hat = static_cast<double>(n.n1) / static_cast<double>(n.n1 + n.n0);
}

namespace {

void dump_node(const std::vector<TreeNode>& nodes, const FeatureSchema& schema, int32_t i, int depth,
               std::string& out) {
    std::string indent(2 * depth, ' ');
    const TreeNode& n = nodes[i];
    if (n.is_leaf()) {
        out += indent + "leaf N1=" + std::to_string(n.n1) + " N0=" + std::to_string(n.n0) +
               " p=" + format_double(n.p_hat) + "\n";
        return;
    }
    const Feature& f = schema.feature(n.split.feature);
    if (f.kind == FeatureKind::continuous) {
        out += indent + "split " + f.name + " <= " + format_double(n.split.threshold) + "\n";
    } else {
        std::string lv;
        for (std::size_t l = 0; l < f.levels.size(); ++l) {
            if ((n.split.left_levels >> l) & 1ULL) {
                if (!lv.empty()) lv += ",";
                lv += f.levels[l];
            }
        }
        out += indent + "split " + f.name + " in " + lv + "\n";
    }
    dump_node(nodes, schema, n.left, depth + 1, out);
    dump_node(nodes, schema, n.right, depth + 1, out);
}

int line_depth(const std::string& line) {
    std::size_t spaces = 0;
    while (spaces < line.size() && line[spaces] == ' ') ++spaces;
    if (spaces % 2 != 0) throw std::invalid_argument("tree text indentation must be two spaces per level");
    return static_cast<int>(spaces / 2);
}

int32_t parse_node(const FeatureSchema& schema, const std::vector<std::string>& lines, std::size_t& cursor,
                   int depth, std::vector<TreeNode>& out) {
    if (cursor >= lines.size()) throw std::invalid_argument("tree text ended unexpectedly");
    const std::string& line = lines[cursor];
    if (line_depth(line) != depth) throw std::invalid_argument("bad tree indentation at: " + line);
    std::string body(trim(line));
    ++cursor;

    int32_t idx = static_cast<int32_t>(out.size());
    out.push_back(TreeNode{});
    if (body.rfind("leaf", 0) == 0) {
        int64_t n1 = 0, n0 = 0;
        double p = -1;
        bool have_counts = false;
        for (const auto& tok : split(body.substr(4), ' ')) {
            auto t = trim(tok);
            if (t.empty()) continue;
            if (t.rfind("N1=", 0) == 0) {
                n1 = parse_int(t.substr(3), "leaf N1");
                have_counts = true;
            } else if (t.rfind("N0=", 0) == 0) {
                n0 = parse_int(t.substr(3), "leaf N0");
                have_counts = true;
            } else if (t.rfind("p=", 0) == 0) {
                p = parse_double(t.substr(2), "leaf p");
            } else {
                throw std::invalid_argument("unrecognized leaf field: " + std::string(t));
            }
        }
        if (p < 0 || p > 1) throw std::invalid_argument("leaf line needs p in [0,1]: " + body);
        out[idx].n1 = n1;
        out[idx].n0 = n0;
        out[idx].p_hat = have_counts && n1 + n0 > 0 ? static_cast<double>(n1) / static_cast<double>(n1 + n0) : p;
        return idx;
    }
    if (body.rfind("split ", 0) != 0) throw std::invalid_argument("expected 'split' or 'leaf': " + body);

    std::string rest = body.substr(6);
    SplitRule rule;
    std::size_t le = rest.find(" <= ");
    std::size_t in = rest.find(" in ");
    if (le != std::string::npos) {
        std::string name(trim(rest.substr(0, le)));
        rule.feature = schema.feature_index(name);
        if (rule.feature < 0) throw std::invalid_argument("unknown feature in tree text: " + name);
        if (schema.feature(rule.feature).kind != FeatureKind::continuous)
            throw std::invalid_argument("'<=' split on categorical feature: " + name);
        rule.threshold = parse_double(rest.substr(le + 4), "split threshold");
    } else if (in != std::string::npos) {
        std::string name(trim(rest.substr(0, in)));
        rule.feature = schema.feature_index(name);
        if (rule.feature < 0) throw std::invalid_argument("unknown feature in tree text: " + name);
        if (schema.feature(rule.feature).kind != FeatureKind::categorical)
            throw std::invalid_argument("'in' split on continuous feature: " + name);
        for (const auto& lvl : split(rest.substr(in + 4), ',')) {
            int l = schema.level_index(rule.feature, trim(lvl));
            if (l < 0) throw std::invalid_argument("unknown level '" + std::string(trim(lvl)) + "' for " + name);
            rule.left_levels |= 1ULL << l;
        }
        if (rule.left_levels == 0) throw std::invalid_argument("categorical split with empty level set: " + body);
    } else {
        throw std::invalid_argument("malformed split line: " + body);
    }

    out[idx].split = rule;
    int32_t l = parse_node(schema, lines, cursor, depth + 1, out);
    int32_t r = parse_node(schema, lines, cursor, depth + 1, out);
    out[idx].left = l;
    out[idx].right = r;
    out[idx].n1 = out[l].n1 + out[r].n1;
    out[idx].n0 = out[l].n0 + out[r].n0;
    int64_t n = out[idx].n1 + out[idx].n0;
    out[idx].p_hat = n > 0 ? static_cast<double>(out[idx].n1) / static_cast<double>(n) : 0.5;
    return idx;
}

}  // namespace

std::string DecisionTree::dump() const {
    std::string out;
    dump_node(nodes_, *schema_, 0, 0, out);
    return out;
}

DecisionTree parse_tree(const FeatureSchema& schema, const std::vector<std::string>& lines, SchemaPtr shared) {
    std::vector<std::string> kept;
    for (const auto& l : lines) {
        auto t = trim(l);
        if (t.empty() || t.front() == '#') continue;
        kept.push_back(l);
    }
    if (kept.empty()) throw std::invalid_argument("empty tree text");
    DecisionTree tree;
    tree.schema_ = shared && *shared == schema ? shared : std::make_shared<FeatureSchema>(schema);
    std::size_t cursor = 0;
    parse_node(schema, kept, cursor, line_depth(kept[0]), tree.nodes_);
    if (cursor != kept.size()) throw std::invalid_argument("trailing lines after tree text");
    return tree;
}

}  // namespace treebandit
