#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "treebandit/environments.hpp"
#include "treebandit/policies.hpp"

namespace treebandit {

struct StepRecord {
    int64_t t = 0;  // 1-based step
    int action = 0;
    int reward = 0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
};

struct RegretTrace {
    int replication = 0;
    std::vector<StepRecord> steps;
    bool failed = false;       // a step threw; steps hold the completed prefix
    std::string failure;
};

struct SummaryStats {
    std::vector<double> mean_cum_regret;    // indexed by t-1
    std::vector<double> stderr_cum_regret;
};

// One interaction loop: draw context, select, realize reward, score regret
// against the oracle, then update. A thrown step truncates the trace and sets
// the failure flag instead of propagating.
RegretTrace run_experiment(BanditEnvironment& env, Policy& policy, int64_t horizon, Rng& rng);

using EnvFactory = std::function<std::unique_ptr<BanditEnvironment>(int replication)>;
using PolicyFactory = std::function<std::unique_ptr<Policy>(const BanditEnvironment& env)>;

// Independent replications; replication i runs on its own generator seeded
// with base_seed + i.
std::vector<RegretTrace> run_replications(const EnvFactory& make_env, const PolicyFactory& make_policy,
                                          int64_t horizon, int replications, uint64_t base_seed);

// Mean and standard error of cumulative regret per step over the completed
// replications.
SummaryStats summarize(const std::vector<RegretTrace>& traces);

// Per-step difference in cumulative regret, a.cum - b.cum.
std::vector<double> relative_regret(const RegretTrace& a, const RegretTrace& b);

// CSV with header "replication,t,action,reward,inst_regret,cum_regret";
// replication and action are 1-based in files. Failed replications append a
// trailing "# replication <r> failed: <message>" marker line.
void write_trace_csv(std::ostream& out, const std::vector<RegretTrace>& traces);
std::string trace_csv(const std::vector<RegretTrace>& traces);
std::vector<RegretTrace> parse_trace_csv(std::istream& in);
std::vector<RegretTrace> parse_trace_text(const std::string& text);

// CSV with header "t,mean_cum_regret,stderr_cum_regret".
void write_summary_csv(std::ostream& out, const SummaryStats& stats);
std::string summary_csv(const SummaryStats& stats);
SummaryStats parse_summary_text(const std::string& text);

// Plays the environment's own success probabilities greedily.
class OraclePolicy final : public Policy {
  public:
    explicit OraclePolicy(const BanditEnvironment& env);

    int num_actions() const override { return static_cast<int>(plays_.size()); }
    int select(const ContextVector& x, Rng& rng) override;
    void update(const ContextVector&, int action, int, Rng&) override;
    int64_t arm_history_size(int action) const override;

  private:
    const BanditEnvironment* env_;
    std::vector<int64_t> plays_;
};

struct ExperimentConfig {
    std::string env = "sim";   // "sim" or "csv"
    std::string truth;         // truth file for sim; empty = built-in
    std::string csv;           // data file for csv
    std::string schema;        // schema declaration for csv
    std::string policy = "tree-bootstrap";
    int64_t horizon = 1000;
    int replications = 1;
    uint64_t seed = 1;
    double alpha = 1.0;
    std::optional<int64_t> failure_threshold = 20;  // "none" in files
    bool prior_injection = false;
    double cutoff = 0.0005;    // rare-class fraction for csv ingestion
};

// Flat "key=value" lines; '#' starts a comment.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Policy names: tree-bootstrap, tree-heuristic, ts-free, oracle,
// linucb[:alpha=<v>], logucb[:alpha=<v>]. offline-tree is rejected with a
// pointer at the baseline command.
std::unique_ptr<Policy> make_policy(const std::string& name, const BanditEnvironment& env,
                                    const ExperimentConfig& cfg);

struct RunOutput {
    std::vector<RegretTrace> traces;
    SummaryStats summary;
};

RunOutput run_from_config(const ExperimentConfig& cfg);

struct SweepPoint {
    double alpha = 0.0;
    std::vector<RegretTrace> traces;
    double final_mean_cum_regret = 0.0;
};

// Reruns the configured experiment once per width value, same seeds each time.
std::vector<SweepPoint> sweep_alpha(const ExperimentConfig& cfg, const std::vector<double>& grid);

}  // namespace treebandit
