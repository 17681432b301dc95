#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "treebandit/environments.hpp"
#include "treebandit/harness.hpp"
#include "treebandit/policies.hpp"
#include "treebandit/theory.hpp"
#include "treebandit/tree.hpp"

namespace py = pybind11;
using namespace treebandit;

namespace {

// Opaque schema handle; keeps the shared const pointer out of the binding layer.
struct BoundSchema {
    SchemaPtr ptr;
};

BoundSchema make_bound_schema(
    const std::vector<std::tuple<std::string, std::string, std::vector<std::string>>>& specs) {
    std::vector<Feature> fs;
    for (const auto& [name, kind, levels] : specs) {
        FeatureKind k;
        if (kind == "continuous") {
            k = FeatureKind::continuous;
        } else if (kind == "categorical") {
            k = FeatureKind::categorical;
        } else {
            throw std::invalid_argument("feature kind must be continuous or categorical");
        }
        fs.push_back({name, k, levels});
    }
    return {std::make_shared<FeatureSchema>(std::move(fs))};
}

std::vector<ArmSummary> to_arms(const std::vector<std::pair<int64_t, double>>& raw) {
    std::vector<ArmSummary> arms;
    arms.reserve(raw.size());
    for (auto [n, p] : raw) arms.push_back({n, p});
    return arms;
}

// A policy bundled with its own generator so python callers don't manage RNG state.
struct BoundPolicy {
    std::unique_ptr<Policy> policy;
    Rng rng;

    int select(const ContextVector& x) { return policy->select(x, rng); }
    void update(const ContextVector& x, int action, int reward) { policy->update(x, action, reward, rng); }
    int num_actions() const { return policy->num_actions(); }
    int64_t arm_history_size(int action) const { return policy->arm_history_size(action); }
};

struct BoundTruth {
    TruthSpec spec;
};

py::list trace_rows(const RegretTrace& trace) {
    py::list rows;
    for (const StepRecord& s : trace.steps) {
        py::dict d;
        d["t"] = s.t;
        d["action"] = s.action;
        d["reward"] = s.reward;
        d["inst_regret"] = s.inst_regret;
        d["cum_regret"] = s.cum_regret;
        rows.append(d);
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_treebandit, m) {
    m.doc() = "decision-tree contextual bandit core";

    // --- resampling and posterior distribution tools -----------------------
    m.def("beta_cdf", &beta_cdf, py::arg("alpha"), py::arg("beta"), py::arg("z"),
          "CDF of Beta(alpha, beta) with integer shapes.");
    m.def("scaled_binomial_cdf", &scaled_binomial_cdf, py::arg("n"), py::arg("p"), py::arg("z"),
          "CDF of X/n where X ~ Binomial(n, p).");
    m.def(
        "sup_cdf_distance",
        [](int64_t n, double p) {
            CdfDistance d = sup_cdf_distance(n, p);
            return py::make_tuple(d.sup, d.z_star);
        },
        py::arg("n"), py::arg("p"),
        "Sup distance between the scaled binomial CDF and its limiting beta CDF, with its location.");
    m.def(
        "bootstrap_action_probs",
        [](const std::vector<std::pair<int64_t, double>>& arms) {
            return bootstrap_action_probs(to_arms(arms));
        },
        py::arg("arms"), "Exact pick probabilities under per-arm resampling; arms are (n, p) pairs.");
    m.def(
        "ts_action_probs",
        [](const std::vector<std::pair<int64_t, double>>& arms) { return ts_action_probs(to_arms(arms)); },
        py::arg("arms"), "Pick probabilities under independent beta posteriors; arms are (n, p) pairs.");
    m.def(
        "compare_action_laws",
        [](const std::vector<std::pair<int64_t, double>>& arms) {
            ComparisonReport r = theorem1_report(to_arms(arms));
            py::dict d;
            d["ts_probs"] = r.ts_probs;
            d["bootstrap_probs"] = r.bootstrap_probs;
            d["max_abs_diff"] = r.max_abs_diff;
            d["bound_value"] = r.bound_value;
            return d;
        },
        py::arg("arms"), "Resampling law vs posterior law for the same histories, with the gap bound.");
    m.def(
        "tie_bound_check",
        [](int64_t n, double p) {
            TieBound t = tie_bound_check({n, p});
            py::dict d;
            d["tie_cap"] = t.tie_cap;
            d["argmax"] = t.argmax;
            d["bound"] = t.bound;
            d["ok"] = t.ok;
            return d;
        },
        py::arg("n"), py::arg("p"), "Largest resampled-count mass vs its local limit bound.");
    m.def("decay_slope", &lemma1_slope, py::arg("p"), py::arg("ns"),
          "Log-log slope of the sup CDF distance across history sizes.");

    // --- schema and trees ---------------------------------------------------
    py::class_<BoundSchema>(m, "Schema")
        .def(py::init(&make_bound_schema), py::arg("features"),
             "features: list of (name, kind, levels); kind is 'continuous' or 'categorical'.")
        .def("dimension", [](const BoundSchema& s) { return s.ptr->dimension(); });

    py::class_<DecisionTree>(m, "Tree")
        .def("predict", &DecisionTree::predict, py::arg("x"))
        .def("leaf_count", &DecisionTree::leaf_count)
        .def("depth", &DecisionTree::depth)
        .def("dump", &DecisionTree::dump);

    m.def(
        "fit_tree",
        [](const BoundSchema& schema, const std::vector<ContextVector>& contexts,
           const std::vector<int>& rewards, uint64_t seed, int min_leaf, int cv_folds) {
            if (contexts.size() != rewards.size())
                throw std::invalid_argument("contexts and rewards differ in length");
            ActionDataset data(0, schema.ptr);
            for (std::size_t i = 0; i < contexts.size(); ++i) data.append(contexts[i], rewards[i]);
            CartConfig cfg;
            cfg.min_leaf_size = min_leaf;
            cfg.cv_folds = cv_folds;
            Rng rng(seed);
            return fit_cart(data, cfg, rng);
        },
        py::arg("schema"), py::arg("contexts"), py::arg("rewards"), py::arg("seed") = 1,
        py::arg("min_leaf") = 5, py::arg("cv_folds") = 10,
        "Grow and prune a classification tree on binary rewards.");
    m.def(
        "parse_tree",
        [](const BoundSchema& schema, const std::vector<std::string>& lines) {
            return parse_tree(*schema.ptr, lines, schema.ptr);
        },
        py::arg("schema"), py::arg("lines"), "Rebuild a tree from its dump lines.");

    // --- policies ------------------------------------------------------------
    py::class_<BoundPolicy>(m, "Policy")
        .def("select", &BoundPolicy::select, py::arg("x"))
        .def("update", &BoundPolicy::update, py::arg("x"), py::arg("action"), py::arg("reward"))
        .def("num_actions", &BoundPolicy::num_actions)
        .def("arm_history_size", &BoundPolicy::arm_history_size, py::arg("action"));

    m.def(
        "tree_bootstrap_policy",
        [](const BoundSchema& schema, int num_actions, uint64_t seed,
           std::optional<int64_t> failure_threshold, bool prior_injection) {
            TreeBootstrapConfig cfg;
            cfg.failure_threshold = failure_threshold;
            cfg.prior_injection = prior_injection;
            return BoundPolicy{std::make_unique<TreeBootstrapPolicy>(schema.ptr, num_actions, cfg),
                               Rng(seed)};
        },
        py::arg("schema"), py::arg("num_actions"), py::arg("seed") = 1,
        py::arg("failure_threshold") = std::optional<int64_t>(20), py::arg("prior_injection") = false,
        "One tree per arm, scored on a bootstrap resample of its history each round.");
    m.def(
        "tree_heuristic_policy",
        [](const BoundSchema& schema, int num_actions, uint64_t seed) {
            return BoundPolicy{std::make_unique<TreeHeuristicPolicy>(schema.ptr, num_actions), Rng(seed)};
        },
        py::arg("schema"), py::arg("num_actions"), py::arg("seed") = 1,
        "One tree per arm with beta draws from the routed leaf counts.");
    m.def(
        "ts_free_policy",
        [](int num_actions, uint64_t seed) {
            return BoundPolicy{std::make_unique<ContextFreeTsPolicy>(num_actions), Rng(seed)};
        },
        py::arg("num_actions"), py::arg("seed") = 1, "Context-blind Thompson sampling baseline.");

    // --- simulation ------------------------------------------------------------
    py::class_<BoundTruth>(m, "Truth")
        .def("action_names", [](const BoundTruth& t) { return t.spec.action_names; })
        .def("schema", [](const BoundTruth& t) { return BoundSchema{t.spec.schema}; })
        .def("num_actions", [](const BoundTruth& t) { return static_cast<int>(t.spec.trees.size()); });

    m.def(
        "default_truth", [] { return BoundTruth{default_sports_truth()}; },
        "Built-in four-feature, four-action simulation ground truth.");
    m.def(
        "parse_truth", [](const std::string& text) { return BoundTruth{parse_truth(text)}; },
        py::arg("text"), "Parse a ground-truth description (features, actions, trees).");
    m.def(
        "load_truth", [](const std::string& path) { return BoundTruth{load_truth(path)}; },
        py::arg("path"), "Load a ground-truth description from a file.");

    m.def(
        "run_simulated",
        [](const BoundTruth& truth, BoundPolicy& policy, int64_t horizon, uint64_t seed) {
            auto env = make_simulated_env(truth.spec);
            Rng rng(seed);
            RegretTrace trace = run_experiment(*env, *policy.policy, horizon, rng);
            if (trace.failed) throw std::runtime_error(trace.failure);
            return trace_rows(trace);
        },
        py::arg("truth"), py::arg("policy"), py::arg("horizon"), py::arg("seed") = 1,
        "Play `policy` against a simulated environment; returns one dict per step.");
}
