// Command-line front end: single runs, canned experiments and the allocator
// cross-check.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 oracle failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "repalloc/experiment.hpp"
#include "repalloc/oracle.hpp"
#include "repalloc/scenario.hpp"

namespace fs = std::filesystem;
using namespace repalloc;

namespace {

fs::path default_out() {
    const char* env = std::getenv("REPALLOC_OUT");
    return env && *env ? fs::path(env) : fs::path("results");
}

ScenarioConfig load(const std::string& scenario) {
    return scenario.empty() ? ScenarioConfig{} : parse_scenario(scenario);
}

int cmd_run(const std::string& scenario, const std::vector<std::uint64_t>& seeds,
            const fs::path& out) {
    const ScenarioConfig base = load(scenario);
    fs::create_directories(out);
    std::vector<std::uint64_t> list = seeds.empty() ? std::vector{base.seed} : seeds;
    for (auto seed : list) {
        ScenarioConfig cfg = base;
        cfg.seed = seed;
        const MetricsSeries series = run(cfg);
        write_run_csv(out / fmt::format("run_seed{}.csv", seed), series);
        if (!series.reviews.empty())
            write_capacity_csv(out / fmt::format("capacity_seed{}.csv", seed), series);
        if (!series.reputation_dumps.empty())
            write_reputation_csv(out / fmt::format("reputation_seed{}.csv", seed), series);
        if (!series.neighbor_dumps.empty())
            write_neighbor_csv(out / fmt::format("neighbors_seed{}.csv", seed), series);
        std::cerr << fmt::format("seed {}: {} rows\n", seed, series.rows.size());
    }
    std::ofstream(out / "config.yaml") << emit_scenario(base);
    return 0;
}

int cmd_experiment(const std::string& kind, const std::string& scenario,
                   const std::string& sweep, const std::vector<std::uint64_t>& seeds,
                   const fs::path& out, unsigned jobs, std::int64_t window) {
    std::vector<ExperimentKind> kinds;
    if (kind == "all")
        kinds = {ExperimentKind::capacity_tiers, ExperimentKind::free_riders,
                 ExperimentKind::strategies, ExperimentKind::interest_routing};
    else
        kinds = {experiment_kind_from_string(kind)};

    for (auto k : kinds) {
        ExperimentSpec spec;
        spec.kind = k;
        if (!scenario.empty()) spec.base = parse_scenario(scenario);
        if (!sweep.empty()) {
            const auto eq = sweep.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == sweep.size())
                throw InvariantViolation("--sweep expects key=v1,v2,...");
            Sweep s{sweep.substr(0, eq), {}};
            std::stringstream ss(sweep.substr(eq + 1));
            for (std::string v; std::getline(ss, v, ',');)
                if (!v.empty()) s.values.push_back(v);
            spec.sweep = s;
        }
        spec.seeds = seeds;
        spec.out = out;
        spec.jobs = jobs;
        spec.window = window;
        const auto result = run_experiment(spec);
        std::cout << fmt::format("{}: {} run files, {} aggregate rows in {}\n", to_string(k),
                                 result.runs.size(), result.aggregate.size(),
                                 result.directory.string());
        for (const auto& row : result.aggregate)
            if (row.metric.rfind("received_w", 0) != 0)
                std::cout << fmt::format("  {:<16} {:<22} {:>12} +/- {}\n", row.sweep_value,
                                         row.metric, format_real(row.mean),
                                         format_real(row.stddev));
    }
    return 0;
}

int cmd_oracle(std::size_t trials, std::uint64_t seed, const OracleLimits& limits, double x,
               bool inject_fault) {
    const OracleReport r = inject_fault
                               ? oracle_check(limits, trials, seed, x, largest_first_allocate)
                               : oracle_check(limits, trials, seed, x);
    std::cout << fmt::format("trials {} max_gap {:.3e} gap_failures {} infeasible {}\n",
                             r.trials, r.max_gap, r.gap_failures, r.infeasible);
    std::cout << (r.passed() ? "oracle: PASS\n" : "oracle: FAIL\n");
    return r.passed() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reputation-weighted capacity allocation simulator"};
    app.require_subcommand(1);

    std::string scenario, sweep, kind = "all";
    std::vector<std::uint64_t> seeds;
    std::string out_arg;
    unsigned jobs = 1;
    std::int64_t window = 50;

    auto* run_cmd = app.add_subcommand("run", "Run one scenario and write per-iteration CSVs");
    run_cmd->add_option("--scenario", scenario, "Scenario YAML (defaults when omitted)")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seeds, "Seed list, e.g. 1,2,3")->delimiter(',');
    run_cmd->add_option("--out", out_arg, "Output directory (default $REPALLOC_OUT or results)");

    auto* exp_cmd = app.add_subcommand("experiment", "Run a canned or custom experiment");
    exp_cmd->add_option("--kind", kind,
                        "capacity-tiers | free-riders | strategies | interest-routing | custom | all")
        ->capture_default_str();
    exp_cmd->add_option("--scenario", scenario, "Base scenario replacing the canned one")
        ->check(CLI::ExistingFile);
    exp_cmd->add_option("--sweep", sweep, "key=v1,v2,... over a scenario key");
    exp_cmd->add_option("--seed", seeds, "Seed list, e.g. 1,2,3")->delimiter(',');
    exp_cmd->add_option("--out", out_arg, "Output directory (default $REPALLOC_OUT or results)");
    exp_cmd->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
    exp_cmd->add_option("--window", window, "Iterations per windowed metric")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* cfg_cmd = app.add_subcommand("config", "Print the resolved scenario");
    cfg_cmd->add_option("--scenario", scenario, "Scenario YAML")->check(CLI::ExistingFile);

    std::size_t trials = 1000;
    std::uint64_t oracle_seed = 1;
    OracleLimits limits;
    double x = 0.75;
    bool inject_fault = false;
    auto* oracle_cmd =
        app.add_subcommand("oracle-check", "Compare the greedy split with exhaustive search");
    oracle_cmd->add_option("--trials", trials)->capture_default_str();
    oracle_cmd->add_option("--seed", oracle_seed)->capture_default_str();
    oracle_cmd->add_option("--max-requesters", limits.max_requesters)->capture_default_str();
    oracle_cmd->add_option("--max-demand", limits.max_demand)->capture_default_str();
    oracle_cmd->add_option("--max-capacity", limits.max_capacity)->capture_default_str();
    oracle_cmd->add_option("--x", x, "Objective exponent")->capture_default_str();
    oracle_cmd->add_flag("--inject-fault", inject_fault,
                         "Check a deliberately suboptimal allocator instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const fs::path out = out_arg.empty() ? default_out() : fs::path(out_arg);
    try {
        if (*run_cmd) return cmd_run(scenario, seeds, out);
        if (*exp_cmd) return cmd_experiment(kind, scenario, sweep, seeds, out, jobs, window);
        if (*cfg_cmd) {
            std::cout << emit_scenario(load(scenario));
            return 0;
        }
        if (*oracle_cmd) return cmd_oracle(trials, oracle_seed, limits, x, inject_fault);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
