#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treebandit/harness.hpp"
#include "treebandit/theory.hpp"

namespace {

using namespace treebandit;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}

// Options shared by run and sweep, funneled through the config validator so
// flags and config files obey identical rules; flags win.
struct RunFlags {
    std::string config;
    std::vector<std::pair<std::string, std::string*>> values;
    bool prior_injection = false;
    bool prior_injection_set = false;

    std::string env, truth, csv, schema, policy, horizon, replications, seed, alpha, failure_threshold, cutoff;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config, "key=value configuration file");
        auto opt = [&](const char* flag, std::string& slot, const char* key, const char* help) {
            values.emplace_back(key, &slot);
            cmd->add_option(flag, slot, help);
        };
        opt("--env", env, "env", "environment: sim or csv");
        opt("--truth", truth, "truth", "truth file for the simulated environment");
        opt("--csv", csv, "csv", "data file for the csv environment");
        opt("--schema", schema, "schema", "schema declaration for the csv environment");
        opt("--policy", policy, "policy", "tree-bootstrap, tree-heuristic, ts-free, oracle, linucb, logucb");
        opt("--horizon", horizon, "horizon", "steps per replication");
        opt("--replications", replications, "replications", "independent replications");
        opt("--seed", seed, "seed", "base seed; replication i uses seed+i");
        opt("--alpha", alpha, "alpha", "confidence width multiplier for linucb/logucb");
        opt("--failure-threshold", failure_threshold, "failure_threshold",
            "failures before an unrewarded arm is dropped; 'none' keeps it");
        opt("--cutoff", cutoff, "cutoff", "rare-class fraction dropped at ingestion");
        cmd->add_flag("--prior-injection,!--no-prior-injection", prior_injection,
                      "fabricate one success and one failure per arm instead of forced pulls")
            ->each([this](const std::string&) { prior_injection_set = true; });
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : parse_config_file(config);
        for (const auto& [key, slot] : values)
            if (!slot->empty()) apply_config_entry(cfg, key, *slot);
        if (prior_injection_set) cfg.prior_injection = prior_injection;
        return cfg;
    }
};

void write_outputs(const RunOutput& out, const std::string& trace_path, const std::string& summary_path) {
    if (trace_path.empty()) {
        write_trace_csv(std::cout, out.traces);
    } else {
        std::ofstream f = open_out(trace_path);
        write_trace_csv(f, out.traces);
    }
    if (!summary_path.empty()) {
        std::ofstream f = open_out(summary_path);
        write_summary_csv(f, out.summary);
    }
    std::ostream& info = trace_path.empty() ? std::cerr : std::cout;
    int failed = 0;
    for (const auto& t : out.traces) failed += t.failed ? 1 : 0;
    info << "replications=" << out.traces.size() << " failed=" << failed;
    if (!out.summary.mean_cum_regret.empty())
        info << " final_mean_cum_regret=" << format_double(out.summary.mean_cum_regret.back());
    info << '\n';
}

std::vector<ArmSummary> parse_arm_list(const std::string& text) {
    std::vector<ArmSummary> arms;
    for (std::string_view part : split(text, ',')) {
        std::vector<std::string> nv = split(part, ':');
        if (nv.size() != 2) throw std::invalid_argument("arms must look like n:p,n:p");
        arms.push_back({parse_int(trim(nv[0]), "arm size"), parse_double(trim(nv[1]), "arm rate")});
    }
    if (arms.size() < 2) throw std::invalid_argument("need at least two arms");
    return arms;
}

void emit_theory(std::ostream& out, const std::string& mode, double p, const std::vector<ArmSummary>& arms) {
    if (mode == "lemma1") {
        out << "n,sup,z_star,sup_sqrt_n\n";
        for (int64_t n : {16, 64, 256, 1024, 4096}) {
            CdfDistance d = sup_cdf_distance(n, p);
            out << n << ',' << format_double(d.sup) << ',' << format_double(d.z_star) << ','
                << format_double(d.sup * std::sqrt(static_cast<double>(n))) << '\n';
        }
    } else if (mode == "lemma2") {
        out << "n,successes,tie_cap,argmax,bound,ok\n";
        bool all_ok = true;
        for (int64_t n = 2; n <= 64; ++n) {
            for (int64_t s = 1; s < n; ++s) {
                ArmSummary arm{n, static_cast<double>(s) / static_cast<double>(n)};
                TieBound tb = tie_bound_check(arm);
                bool ok = tb.ok && tb.argmax == s;
                all_ok = all_ok && ok;
                out << n << ',' << s << ',' << format_double(tb.tie_cap) << ',' << tb.argmax << ','
                    << format_double(tb.bound) << ',' << (ok ? "true" : "false") << '\n';
            }
        }
        out << "# all_ok " << (all_ok ? "true" : "false") << '\n';
    } else if (mode == "theorem1") {
        out << "scale,max_abs_diff,bound\n";
        for (int64_t scale : {1, 4, 16}) {
            std::vector<ArmSummary> scaled = arms;
            for (ArmSummary& a : scaled) a.n *= scale;
            ComparisonReport r = theorem1_report(scaled);
            out << scale << ',' << format_double(r.max_abs_diff) << ',' << format_double(r.bound_value) << '\n';
        }
    } else if (mode == "slopes") {
        out << "quantity,slope\n";
        out << "lemma1_sup," << format_double(lemma1_slope(p, {16, 64, 256, 1024, 4096})) << '\n';
        out << "theorem1_gap," << format_double(theorem1_slope(arms, {1, 2, 4, 8})) << '\n';
    } else {
        throw std::invalid_argument("unknown theory mode: " + mode);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision-tree contextual bandits: run experiments, baselines, and numeric checks"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Play a policy against an environment and record regret");
    RunFlags run_flags;
    run_flags.attach(run_cmd);
    std::string run_out, run_summary;
    run_cmd->add_option("--out", run_out, "trace CSV path (default: stdout)");
    run_cmd->add_option("--summary", run_summary, "summary CSV path");

    auto* base_cmd = app.add_subcommand("baseline", "Fit frozen one-vs-rest trees and replay the holdout");
    std::string base_csv, base_schema, base_out, base_summary;
    int64_t base_holdout = 0;
    uint64_t base_seed = 1;
    double base_cutoff = 0.0005;
    base_cmd->add_option("--csv", base_csv, "data file")->required();
    base_cmd->add_option("--schema", base_schema, "schema declaration file")->required();
    base_cmd->add_option("--holdout", base_holdout, "rows held out for replay")->required();
    base_cmd->add_option("--seed", base_seed, "seed for the holdout draw and replay");
    base_cmd->add_option("--cutoff", base_cutoff, "rare-class fraction dropped at ingestion");
    base_cmd->add_option("--out", base_out, "trace CSV path (default: stdout)");
    base_cmd->add_option("--summary", base_summary, "summary CSV path");

    auto* theory_cmd = app.add_subcommand("theory", "Tables for the approximation guarantees");
    std::string theory_mode, theory_out;
    double theory_p = 0.5;
    std::string theory_arms = "8:0.5,12:0.6666666666666666";
    theory_cmd->add_option("--mode", theory_mode, "lemma1, lemma2, theorem1, or slopes")->required();
    theory_cmd->add_option("--p", theory_p, "success rate for lemma1/slopes");
    theory_cmd->add_option("--arms", theory_arms, "base arms n:p,n:p for theorem1/slopes");
    theory_cmd->add_option("--out", theory_out, "output path (default: stdout)");

    auto* sweep_cmd = app.add_subcommand("sweep", "Rerun an experiment across confidence widths");
    RunFlags sweep_flags;
    sweep_flags.attach(sweep_cmd);
    std::string sweep_param = "alpha", sweep_grid, sweep_dir = ".";
    sweep_cmd->add_option("--param", sweep_param, "swept parameter (only alpha)");
    sweep_cmd->add_option("--grid", sweep_grid, "comma-separated width values")->required();
    sweep_cmd->add_option("--out-dir", sweep_dir, "directory for per-value trace files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            write_outputs(run_from_config(run_flags.resolve()), run_out, run_summary);
        } else if (*base_cmd) {
            auto table = ingest_csv(base_csv, base_schema, base_cutoff);
            Rng rng(base_seed);
            OfflineFit fit = offline_tree_fit(table, base_holdout, CartConfig{}, rng);
            auto holdout = std::make_shared<const ClassificationTable>(std::move(fit.holdout));
            auto env = make_classification_env(holdout, base_seed);
            RunOutput out;
            out.traces.push_back(run_experiment(*env, *fit.policy, base_holdout, rng));
            out.summary = summarize(out.traces);
            write_outputs(out, base_out, base_summary);
        } else if (*theory_cmd) {
            std::vector<ArmSummary> arms = parse_arm_list(theory_arms);
            if (theory_out.empty()) {
                emit_theory(std::cout, theory_mode, theory_p, arms);
            } else {
                std::ofstream f = open_out(theory_out);
                emit_theory(f, theory_mode, theory_p, arms);
            }
        } else if (*sweep_cmd) {
            if (sweep_param != "alpha") throw std::invalid_argument("only alpha can be swept");
            std::vector<double> grid;
            for (std::string_view part : split(sweep_grid, ','))
                grid.push_back(parse_double(trim(part), "grid value"));
            std::vector<SweepPoint> points = sweep_alpha(sweep_flags.resolve(), grid);
            std::filesystem::create_directories(sweep_dir);
            std::cout << "alpha,final_mean_cum_regret,trace\n";
            for (const SweepPoint& pt : points) {
                std::string path = sweep_dir + "/alpha_" + format_double(pt.alpha) + ".csv";
                std::ofstream f = open_out(path);
                write_trace_csv(f, pt.traces);
                std::cout << format_double(pt.alpha) << ',' << format_double(pt.final_mean_cum_regret) << ','
                          << path << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
