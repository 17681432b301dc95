#include "treebandit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace treebandit {

RegretTrace run_experiment(BanditEnvironment& env, Policy& policy, int64_t horizon, Rng& rng) {
    if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
    if (policy.num_actions() != env.num_actions())
        throw std::invalid_argument("environment and policy disagree on action count");
    RegretTrace trace;
    double cum = 0.0;
    for (int64_t t = 1; t <= horizon; ++t) {
        try {
            ContextVector x = env.next_context(rng);
            int a = policy.select(x, rng);
            int r = env.realize_reward(x, a, rng);
            std::vector<double> probs = env.oracle_probs(x);
            double best = *std::max_element(probs.begin(), probs.end());
            double inst = best - probs[a];
            cum += inst;
            trace.steps.push_back({t, a, r, inst, cum});
            policy.update(x, a, r, rng);
        } catch (const std::exception& e) {
            trace.failed = true;
            trace.failure = e.what();
            break;
        }
    }
    return trace;
}

std::vector<RegretTrace> run_replications(const EnvFactory& make_env, const PolicyFactory& make_policy,
                                          int64_t horizon, int replications, uint64_t base_seed) {
    if (replications < 1) throw std::invalid_argument("need at least one replication");
    std::vector<RegretTrace> out;
    out.reserve(replications);
    for (int i = 0; i < replications; ++i) {
        Rng rng(base_seed + static_cast<uint64_t>(i));
        std::unique_ptr<BanditEnvironment> env = make_env(i);
        std::unique_ptr<Policy> policy = make_policy(*env);
        RegretTrace trace = run_experiment(*env, *policy, horizon, rng);
        trace.replication = i;
        out.push_back(std::move(trace));
    }
    return out;
}

SummaryStats summarize(const std::vector<RegretTrace>& traces) {
    std::vector<const RegretTrace*> done;
    for (const RegretTrace& t : traces)
        if (!t.failed) done.push_back(&t);
    SummaryStats stats;
    if (done.empty()) return stats;
    std::size_t horizon = done.front()->steps.size();
    for (const RegretTrace* t : done)
        if (t->steps.size() != horizon) throw std::invalid_argument("traces differ in horizon");
    double r = static_cast<double>(done.size());
    for (std::size_t i = 0; i < horizon; ++i) {
        double mean = 0.0;
        for (const RegretTrace* t : done) mean += t->steps[i].cum_regret;
        mean /= r;
        double se = 0.0;
        if (done.size() > 1) {
            double ss = 0.0;
            for (const RegretTrace* t : done) {
                double d = t->steps[i].cum_regret - mean;
                ss += d * d;
            }
            se = std::sqrt(ss / (r - 1.0) / r);
        }
        stats.mean_cum_regret.push_back(mean);
        stats.stderr_cum_regret.push_back(se);
    }
    return stats;
}

std::vector<double> relative_regret(const RegretTrace& a, const RegretTrace& b) {
    if (a.steps.size() != b.steps.size()) throw std::invalid_argument("traces differ in horizon");
    std::vector<double> out(a.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i)
        out[i] = a.steps[i].cum_regret - b.steps[i].cum_regret;
    return out;
}

namespace {

constexpr const char* kTraceHeader = "replication,t,action,reward,inst_regret,cum_regret";
constexpr const char* kSummaryHeader = "t,mean_cum_regret,stderr_cum_regret";

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<RegretTrace>& traces) {
    out << kTraceHeader << '\n';
    for (const RegretTrace& trace : traces) {
        for (const StepRecord& s : trace.steps) {
            out << (trace.replication + 1) << ',' << s.t << ',' << (s.action + 1) << ',' << s.reward << ','
                << format_double(s.inst_regret) << ',' << format_double(s.cum_regret) << '\n';
        }
    }
    for (const RegretTrace& trace : traces)
        if (trace.failed) out << "# replication " << (trace.replication + 1) << " failed: " << trace.failure << '\n';
}

std::string trace_csv(const std::vector<RegretTrace>& traces) {
    std::ostringstream ss;
    write_trace_csv(ss, traces);
    return ss.str();
}

std::vector<RegretTrace> parse_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty trace file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) throw std::invalid_argument("unexpected trace header: " + line);

    std::vector<RegretTrace> traces;
    auto trace_for = [&traces](int rep) -> RegretTrace& {
        for (RegretTrace& t : traces)
            if (t.replication == rep) return t;
        traces.emplace_back();
        traces.back().replication = rep;
        return traces.back();
    };

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t(trim(line));
        if (t.empty()) continue;
        if (t[0] == '#') {
            constexpr std::string_view kPrefix = "# replication ";
            std::size_t failed_at = t.find(" failed: ");
            if (t.rfind(kPrefix, 0) == 0 && failed_at != std::string::npos) {
                int rep = static_cast<int>(parse_int(
                    std::string_view(t).substr(kPrefix.size(), failed_at - kPrefix.size()), "replication"));
                RegretTrace& tr = trace_for(rep - 1);
                tr.failed = true;
                tr.failure = t.substr(failed_at + 9);
            }
            continue;
        }
        std::vector<std::string> cells = split(t, ',');
        if (cells.size() != 6) throw std::invalid_argument("trace row needs 6 cells: " + t);
        int rep = static_cast<int>(parse_int(cells[0], "replication")) - 1;
        if (rep < 0) throw std::invalid_argument("replication must be positive");
        if (!traces.empty() && rep < traces.back().replication)
            throw std::invalid_argument("trace rows out of order");
        StepRecord s;
        s.t = parse_int(cells[1], "t");
        s.action = static_cast<int>(parse_int(cells[2], "action")) - 1;
        if (s.action < 0) throw std::invalid_argument("action must be positive");
        s.reward = static_cast<int>(parse_int(cells[3], "reward"));
        if (s.reward != 0 && s.reward != 1) throw std::invalid_argument("reward must be 0 or 1");
        s.inst_regret = parse_double(cells[4], "inst_regret");
        s.cum_regret = parse_double(cells[5], "cum_regret");
        trace_for(rep).steps.push_back(s);
    }
    std::sort(traces.begin(), traces.end(),
              [](const RegretTrace& a, const RegretTrace& b) { return a.replication < b.replication; });
    return traces;
}

std::vector<RegretTrace> parse_trace_text(const std::string& text) {
    std::istringstream ss(text);
    return parse_trace_csv(ss);
}

void write_summary_csv(std::ostream& out, const SummaryStats& stats) {
    out << kSummaryHeader << '\n';
    for (std::size_t i = 0; i < stats.mean_cum_regret.size(); ++i) {
        out << (i + 1) << ',' << format_double(stats.mean_cum_regret[i]) << ','
            << format_double(stats.stderr_cum_regret[i]) << '\n';
    }
}

std::string summary_csv(const SummaryStats& stats) {
    std::ostringstream ss;
    write_summary_csv(ss, stats);
    return ss.str();
}

SummaryStats parse_summary_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty summary file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSummaryHeader) throw std::invalid_argument("unexpected summary header: " + line);
    SummaryStats stats;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t(trim(line));
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> cells = split(t, ',');
        if (cells.size() != 3) throw std::invalid_argument("summary row needs 3 cells: " + t);
        stats.mean_cum_regret.push_back(parse_double(cells[1], "mean_cum_regret"));
        stats.stderr_cum_regret.push_back(parse_double(cells[2], "stderr_cum_regret"));
    }
    return stats;
}

OraclePolicy::OraclePolicy(const BanditEnvironment& env) : env_(&env), plays_(env.num_actions(), 0) {}

int OraclePolicy::select(const ContextVector& x, Rng& rng) {
    std::vector<double> probs = env_->oracle_probs(x);
    return static_cast<int>(argmax_uniform_ties(probs, rng));
}

void OraclePolicy::update(const ContextVector&, int action, int, Rng&) {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    ++plays_[action];
}

int64_t OraclePolicy::arm_history_size(int action) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
    return plays_[action];
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "env") {
        if (value != "sim" && value != "csv") throw std::invalid_argument("env must be sim or csv");
        cfg.env = value;
    } else if (key == "truth") {
        cfg.truth = value;
    } else if (key == "csv") {
        cfg.csv = value;
    } else if (key == "schema") {
        cfg.schema = value;
    } else if (key == "policy") {
        cfg.policy = value;
    } else if (key == "horizon") {
        cfg.horizon = parse_int(value, "horizon");
        if (cfg.horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
    } else if (key == "replications") {
        cfg.replications = static_cast<int>(parse_int(value, "replications"));
        if (cfg.replications < 1) throw std::invalid_argument("replications must be positive");
    } else if (key == "seed") {
        int64_t s = parse_int(value, "seed");
        if (s < 0) throw std::invalid_argument("seed must be nonnegative");
        cfg.seed = static_cast<uint64_t>(s);
    } else if (key == "alpha") {
        cfg.alpha = parse_double(value, "alpha");
        if (cfg.alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    } else if (key == "failure_threshold") {
        if (value == "none") {
            cfg.failure_threshold = std::nullopt;
        } else {
            cfg.failure_threshold = parse_int(value, "failure_threshold");
            if (*cfg.failure_threshold < 1) throw std::invalid_argument("failure_threshold must be positive");
        }
    } else if (key == "prior_injection") {
        if (value == "true" || value == "1") cfg.prior_injection = true;
        else if (value == "false" || value == "0") cfg.prior_injection = false;
        else throw std::invalid_argument("prior_injection must be true or false");
    } else if (key == "cutoff") {
        cfg.cutoff = parse_double(value, "cutoff");
        if (cfg.cutoff < 0.0 || cfg.cutoff >= 1.0) throw std::invalid_argument("cutoff must lie in [0,1)");
    } else {
        throw std::invalid_argument("unknown config key: " + key);
    }
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t(trim(line));
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key=value");
        try {
            apply_config_entry(cfg, std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
        } catch (const std::exception& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

std::unique_ptr<Policy> make_policy(const std::string& name, const BanditEnvironment& env,
                                    const ExperimentConfig& cfg) {
    std::string base = name;
    double alpha = cfg.alpha;
    bool has_option = false;
    if (std::size_t pos = name.find(':'); pos != std::string::npos) {
        base = name.substr(0, pos);
        std::string rest = name.substr(pos + 1);
        if (rest.rfind("alpha=", 0) != 0) throw std::invalid_argument("unknown policy option: " + rest);
        alpha = parse_double(rest.substr(6), "alpha");
        if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
        has_option = true;
    }
    int k = env.num_actions();
    if (base == "tree-bootstrap" || base == "tree-heuristic" || base == "ts-free" || base == "oracle") {
        if (has_option) throw std::invalid_argument("policy " + base + " takes no alpha option");
        if (base == "tree-bootstrap") {
            TreeBootstrapConfig c;
            c.failure_threshold = cfg.failure_threshold;
            c.prior_injection = cfg.prior_injection;
            return std::make_unique<TreeBootstrapPolicy>(env.schema(), k, std::move(c));
        }
        if (base == "tree-heuristic") return std::make_unique<TreeHeuristicPolicy>(env.schema(), k);
        if (base == "ts-free") return std::make_unique<ContextFreeTsPolicy>(k);
        return std::make_unique<OraclePolicy>(env);
    }
    if (base == "linucb" || base == "logucb") {
        LinearEncoding enc = LinearEncoding::fit(*env.schema(), env.encoding_rows());
        int dim = enc.dim();
        ContextEncoder f = [enc = std::move(enc)](const ContextVector& x) { return enc.encode(x); };
        if (base == "linucb") {
            LinUcbConfig c;
            c.alpha = alpha;
            return std::make_unique<LinUcbPolicy>(std::move(f), dim, k, std::move(c));
        }
        LogisticUcbConfig c;
        c.alpha = alpha;
        c.horizon = std::max<int64_t>(cfg.horizon, 1);
        return std::make_unique<LogisticUcbPolicy>(std::move(f), dim, k, std::move(c));
    }
    if (base == "offline-tree")
        throw std::invalid_argument("offline-tree is fit offline; use the baseline command");
    throw std::invalid_argument("unknown policy: " + base);
}

RunOutput run_from_config(const ExperimentConfig& cfg) {
    EnvFactory make_env;
    if (cfg.env == "sim") {
        auto truth = std::make_shared<const TruthSpec>(cfg.truth.empty() ? default_sports_truth()
                                                                         : load_truth(cfg.truth));
        make_env = [truth](int) { return make_simulated_env(*truth); };
    } else if (cfg.env == "csv") {
        if (cfg.csv.empty() || cfg.schema.empty())
            throw std::invalid_argument("csv environment needs csv= and schema=");
        auto table = std::make_shared<const ClassificationTable>(ingest_csv(cfg.csv, cfg.schema, cfg.cutoff));
        uint64_t seed = cfg.seed;
        make_env = [table, seed](int rep) { return make_classification_env(table, seed + rep); };
    } else {
        throw std::invalid_argument("unknown environment: " + cfg.env);
    }
    PolicyFactory make_pol = [&cfg](const BanditEnvironment& env) { return make_policy(cfg.policy, env, cfg); };
    RunOutput out;
    out.traces = run_replications(make_env, make_pol, cfg.horizon, cfg.replications, cfg.seed);
    out.summary = summarize(out.traces);
    return out;
}

std::vector<SweepPoint> sweep_alpha(const ExperimentConfig& cfg, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("sweep needs a non-empty grid");
    if (cfg.policy != "linucb" && cfg.policy != "logucb")
        throw std::invalid_argument("sweep varies alpha; policy must be linucb or logucb");
    std::vector<SweepPoint> out;
    for (double alpha : grid) {
        if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
        ExperimentConfig c = cfg;
        c.alpha = alpha;
        SweepPoint point;
        point.alpha = alpha;
        RunOutput run = run_from_config(c);
        point.traces = std::move(run.traces);
        point.final_mean_cum_regret = run.summary.mean_cum_regret.empty()
                                          ? std::numeric_limits<double>::quiet_NaN()
                                          : run.summary.mean_cum_regret.back();
        out.push_back(std::move(point));
    }
    return out;
}

}  // namespace treebandit
