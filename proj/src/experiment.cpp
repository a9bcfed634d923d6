#include "repalloc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "repalloc/scenario.hpp"

namespace repalloc {

namespace fs = std::filesystem;

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::capacity_tiers: return "capacity-tiers";
    case ExperimentKind::free_riders: return "free-riders";
    case ExperimentKind::strategies: return "strategies";
    case ExperimentKind::interest_routing: return "interest-routing";
    case ExperimentKind::custom: return "custom";
    }
    return "custom";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    for (auto k : {ExperimentKind::capacity_tiers, ExperimentKind::free_riders,
                   ExperimentKind::strategies, ExperimentKind::interest_routing,
                   ExperimentKind::custom})
        if (to_string(k) == name) return k;
    throw InvariantViolation("unknown experiment kind '" + name + "'");
}

ScenarioConfig canned_config(ExperimentKind kind) {
    ScenarioConfig c;
    auto group = [](std::string name, std::size_t count, double shared, Strategy s = {}) {
        NodeGroup g;
        g.name = std::move(name);
        g.count = count;
        g.shared_capacity = shared;
        g.strategy = s;
        return g;
    };
    switch (kind) {
    case ExperimentKind::capacity_tiers:
        c.groups = {group("low", 67, 10), group("mid", 67, 20), group("high", 66, 30)};
        break;
    case ExperimentKind::strategies:
        c.groups = {group("BS", 67, 20), group("GS1", 67, 20, Strategy::over_requester(2)),
                    group("GS2", 66, 20, Strategy::over_requester(4))};
        break;
    case ExperimentKind::interest_routing:
        c.n_nodes = 1000;
        c.iterations = 150;
        c.routing.mode = RoutingMode::interest;
        break;
    case ExperimentKind::free_riders:
    case ExperimentKind::custom:
        break;
    }
    return c;
}

std::optional<Sweep> canned_sweep(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::free_riders: return Sweep{"free_rider_pct", {"5", "10", "20", "30"}};
    case ExperimentKind::interest_routing:
        return Sweep{"routing.mode", {"interest", "baseline"}};
    default: return std::nullopt;
    }
}

std::vector<std::uint64_t> canned_seeds(ExperimentKind kind) {
    if (kind == ExperimentKind::interest_routing) return {1, 2, 3};
    return {1, 2, 3, 4, 5};
}

std::string format_real(double v) {
    return fmt::format("{:.6f}", v);
}

namespace {

bool splits_by_group(ExperimentKind kind) {
    return kind == ExperimentKind::capacity_tiers || kind == ExperimentKind::strategies;
}

std::string label(const std::string& sweep_value, const std::string& group) {
    return sweep_value.empty() ? group : sweep_value + ":" + group;
}

std::string file_safe(std::string s) {
    for (char& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '.') ch = '_';
    return s;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

struct MeanAcc {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) { sum += v, ++n; }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

} // namespace

std::vector<RunMetric> run_metrics(ExperimentKind kind, const ScenarioConfig& config,
                                   const MetricsSeries& series, const std::string& sweep_value,
                                   std::int64_t window) {
    std::vector<RunMetric> out;
    const auto& names = series.group_names;
    const std::int64_t warm = config.acquaintance;

    if (splits_by_group(kind)) {
        const std::size_t n_windows =
            window > 0 ? static_cast<std::size_t>((config.iterations + window - 1) / window) : 0;
        std::vector<MeanAcc> post(names.size());
        std::vector<std::vector<MeanAcc>> win(names.size(), std::vector<MeanAcc>(n_windows));
        for (const auto& r : series.rows) {
            if (r.iteration >= warm) post[r.group].add(static_cast<double>(r.received));
            if (n_windows) win[r.group][static_cast<std::size_t>(r.iteration / window)].add(
                static_cast<double>(r.received));
        }
        for (std::size_t g = 0; g < names.size(); ++g) {
            const std::string v = label(sweep_value, names[g]);
            out.push_back({v, "received", post[g].mean()});
            for (std::size_t w = 0; w < n_windows; ++w)
                out.push_back({v, fmt::format("received_w{}", static_cast<std::int64_t>(w) * window),
                               win[g][w].mean()});
        }
        return out;
    }

    switch (kind) {
    case ExperimentKind::free_riders: {
        MeanAcc acc;
        for (const auto& r : series.rows)
            if (r.iteration >= warm && names[r.group] != "free-rider")
                acc.add(static_cast<double>(r.received));
        out.push_back({sweep_value, "contributor_received", acc.mean()});
        break;
    }
    case ExperimentKind::interest_routing: {
        double probes = 0, resolved = 0, queries = 0;
        for (const auto& r : series.rows)
            if (r.iteration >= warm) {
                probes += static_cast<double>(r.probes);
                resolved += static_cast<double>(r.resolved);
                queries += static_cast<double>(r.queries);
            }
        out.push_back({sweep_value, "probes_per_resolved", resolved > 0 ? probes / resolved : 0.0});
        out.push_back({sweep_value, "resolution_rate", queries > 0 ? resolved / queries : 0.0});
        break;
    }
    default: {
        MeanAcc all;
        std::vector<MeanAcc> per(names.size());
        for (const auto& r : series.rows)
            if (r.iteration >= warm) {
                all.add(static_cast<double>(r.received));
                per[r.group].add(static_cast<double>(r.received));
            }
        out.push_back({sweep_value, "received", all.mean()});
        for (std::size_t g = 0; g < names.size(); ++g)
            out.push_back({sweep_value, "received_" + names[g], per[g].mean()});
        break;
    }
    }
    return out;
}

std::vector<AggregateRow> aggregate(const std::vector<RunMetric>& metrics) {
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<double>> values;
    for (const auto& m : metrics) {
        auto key = std::make_pair(m.sweep_value, m.metric);
        auto [it, fresh] = values.try_emplace(key);
        if (fresh) order.push_back(key);
        it->second.push_back(m.value);
    }
    std::vector<AggregateRow> rows;
    for (const auto& key : order) {
        const auto& v = values[key];
        AggregateRow row{key.first, key.second, 0.0, 0.0, v.size()};
        for (double x : v) row.mean += x;
        row.mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - row.mean) * (x - row.mean);
            row.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_run_csv(const fs::path& path, const MetricsSeries& series,
                   std::optional<std::uint32_t> group) {
    auto out = open_out(path);
    out << kRunHeader << '\n';
    std::string buf;
    for (const auto& r : series.rows) {
        if (group && r.group != *group) continue;
        buf.clear();
        fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       r.iteration, r.node.value, series.group_names[r.group], r.requested,
                       r.received, r.served, format_real(r.shared), r.pending, r.selected,
                       format_real(r.utilization), format_real(r.nu), r.queries, r.resolved,
                       r.probes);
        out << buf;
    }
}

void write_capacity_csv(const fs::path& path, const MetricsSeries& series) {
    auto out = open_out(path);
    out << "node,k,iteration,shared_capacity,action,d_k\n";
    for (const auto& r : series.reviews)
        out << fmt::format("{},{},{},{},{},{}\n", r.node.value, r.k, r.iteration,
                           format_real(r.shared), r.action, format_real(r.d_k));
}

void write_reputation_csv(const fs::path& path, const MetricsSeries& series) {
    auto out = open_out(path);
    out << "iteration,owner,peer,t,n_obs\n";
    for (const auto& r : series.reputation_dumps)
        out << fmt::format("{},{},{},{},{}\n", r.iteration, r.owner.value, r.peer.value,
                           format_real(r.t), r.n_obs);
}

void write_neighbor_csv(const fs::path& path, const MetricsSeries& series) {
    auto out = open_out(path);
    out << "iteration,owner,rank,peer,score\n";
    for (const auto& r : series.neighbor_dumps)
        out << fmt::format("{},{},{},{},{}\n", r.iteration, r.owner.value, r.rank, r.peer.value,
                           format_real(r.score));
}

void write_aggregate_csv(const fs::path& path, const std::vector<AggregateRow>& rows) {
    auto out = open_out(path);
    out << kAggregateHeader << '\n';
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{},{}\n", r.sweep_value, r.metric, format_real(r.mean),
                           format_real(r.stddev), r.n_seeds);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    const ScenarioConfig base = spec.base ? *spec.base : canned_config(spec.kind);
    const std::optional<Sweep> sweep = spec.sweep ? spec.sweep : canned_sweep(spec.kind);
    const std::vector<std::uint64_t> seeds = spec.seeds.empty() ? canned_seeds(spec.kind)
                                                                : spec.seeds;
    if (spec.window <= 0) throw InvariantViolation("window must be positive");

    // Resolve every sweep point up front so configuration errors surface
    // before any simulation starts.
    std::vector<std::pair<std::string, ScenarioConfig>> points;
    if (sweep) {
        if (sweep->values.empty()) throw InvariantViolation("sweep has no values");
        for (const auto& v : sweep->values)
            points.emplace_back(v, with_override(base, sweep->parameter, v));
    } else {
        base.validate();
        points.emplace_back("", base);
    }

    struct Job {
        std::size_t point;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < points.size(); ++p)
        for (auto s : seeds) jobs.push_back({p, s});

    ExperimentResult result;
    result.directory = spec.out / to_string(spec.kind);
    fs::create_directories(result.directory);

    std::vector<std::vector<RunMetric>> metrics(jobs.size());
    std::vector<std::vector<RunFile>> files(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const auto& [value, point] = points[jobs[i].point];
                ScenarioConfig cfg = point;
                cfg.seed = jobs[i].seed;
                const MetricsSeries series = run(cfg);
                metrics[i] = run_metrics(spec.kind, cfg, series, value, spec.window);
                const std::string stem = value.empty() ? "run" : "run_" + file_safe(value);
                if (splits_by_group(spec.kind)) {
                    for (std::uint32_t g = 0; g < series.group_names.size(); ++g) {
                        const std::string name = label(value, series.group_names[g]);
                        fs::path rel = fmt::format("run_{}_seed{}.csv", file_safe(name), cfg.seed);
                        write_run_csv(result.directory / rel, series, g);
                        files[i].push_back({name, cfg.seed, rel});
                    }
                } else {
                    fs::path rel = fmt::format("{}_seed{}.csv", stem, cfg.seed);
                    write_run_csv(result.directory / rel, series);
                    files[i].push_back({value, cfg.seed, rel});
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<RunMetric> flat;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        flat.insert(flat.end(), metrics[i].begin(), metrics[i].end());
        result.runs.insert(result.runs.end(), files[i].begin(), files[i].end());
    }
    result.aggregate = aggregate(flat);
    write_aggregate_csv(result.directory / "aggregate.csv", result.aggregate);

    nlohmann::ordered_json manifest;
    manifest["artifact"] = "repalloc";
    manifest["version"] = kVersion;
    manifest["kind"] = to_string(spec.kind);
    manifest["seeds"] = seeds;
    manifest["window"] = spec.window;
    if (sweep)
        manifest["sweep"] = {{"parameter", sweep->parameter}, {"values", sweep->values}};
    else
        manifest["sweep"] = nullptr;
    manifest["run_header"] = kRunHeader;
    manifest["aggregate"] = "aggregate.csv";
    manifest["aggregate_header"] = kAggregateHeader;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const auto& r : result.runs)
        runs.push_back({{"sweep_value", r.sweep_value}, {"seed", r.seed}, {"file", r.file.string()}});
    manifest["runs"] = runs;
    nlohmann::ordered_json configs = nlohmann::ordered_json::object();
    for (const auto& [value, cfg] : points)
        configs[value.empty() ? "base" : value] = emit_scenario(cfg);
    manifest["configs"] = configs;
    open_out(result.directory / "manifest.json") << manifest.dump(2) << '\n';

    write_index_manifest(spec.out);
    return result;
}

void write_index_manifest(const fs::path& out) {
    nlohmann::ordered_json index;
    index["artifact"] = "repalloc";
    index["version"] = kVersion;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (auto k : {ExperimentKind::capacity_tiers, ExperimentKind::free_riders,
                   ExperimentKind::strategies, ExperimentKind::interest_routing,
                   ExperimentKind::custom}) {
        const std::string name = to_string(k);
        if (!fs::exists(out / name / "manifest.json")) continue;
        list.push_back({{"kind", name},
                        {"manifest", name + "/manifest.json"},
                        {"aggregate", name + "/aggregate.csv"}});
    }
    index["experiments"] = list;
    open_out(out / "manifest.json") << index.dump(2) << '\n';
}

} // namespace repalloc
