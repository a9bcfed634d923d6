#pragma once

// Canned and custom experiments: seed/sweep expansion, parallel execution,
// per-run CSVs, the aggregate table and the manifest consumed by plotting.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "repalloc/sim.hpp"

namespace repalloc {

enum class ExperimentKind { capacity_tiers, free_riders, strategies, interest_routing, custom };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

inline constexpr const char* kVersion = "1.0.0";

struct Sweep {
    std::string parameter;           // dotted scenario key
    std::vector<std::string> values;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::custom;
    std::optional<ScenarioConfig> base;  // replaces the canned base when set
    std::optional<Sweep> sweep;          // replaces the canned sweep when set
    std::vector<std::uint64_t> seeds;    // empty: canned seeds
    std::filesystem::path out = "results";
    unsigned jobs = 1;
    std::int64_t window = 50;            // iterations per received_w* metric
};

/// Canned base scenario for each kind.
ScenarioConfig canned_config(ExperimentKind kind);
std::optional<Sweep> canned_sweep(ExperimentKind kind);
std::vector<std::uint64_t> canned_seeds(ExperimentKind kind);

inline constexpr const char* kRunHeader =
    "iteration,node,group,requested,received,served,shared_capacity,pending,selected,"
    "utilization,nu,queries,resolved,probes";
inline constexpr const char* kAggregateHeader = "sweep_value,metric,mean,stddev,n_seeds";

struct AggregateRow {
    std::string sweep_value;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;   // sample standard deviation, 0 for a single seed
    std::size_t n_seeds = 0;
};

struct RunFile {
    std::string sweep_value;
    std::uint64_t seed = 0;
    std::filesystem::path file;  // relative to the experiment directory
};

struct ExperimentResult {
    std::filesystem::path directory;
    std::vector<RunFile> runs;
    std::vector<AggregateRow> aggregate;
};

/// One value per metric for one run, keyed by the sweep value it belongs to.
struct RunMetric {
    std::string sweep_value;
    std::string metric;
    double value = 0.0;
};

/// Metrics of one simulation. `sweep_value` labels the run; kinds that split
/// by group label each group's metrics with the group name instead.
std::vector<RunMetric> run_metrics(ExperimentKind kind, const ScenarioConfig& config,
                                   const MetricsSeries& series, const std::string& sweep_value,
                                   std::int64_t window);

std::vector<AggregateRow> aggregate(const std::vector<RunMetric>& metrics);

void write_run_csv(const std::filesystem::path& path, const MetricsSeries& series,
                   std::optional<std::uint32_t> group = std::nullopt);
void write_capacity_csv(const std::filesystem::path& path, const MetricsSeries& series);
void write_reputation_csv(const std::filesystem::path& path, const MetricsSeries& series);
void write_neighbor_csv(const std::filesystem::path& path, const MetricsSeries& series);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);

/// Fixed six-decimal rendering used in every CSV.
std::string format_real(double v);

/// Runs every (sweep value, seed) pair on up to `spec.jobs` threads and writes
/// <out>/<kind>/ with run CSVs, aggregate.csv and manifest.json. The index
/// <out>/manifest.json is rebuilt from the kind directories present.
ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_index_manifest(const std::filesystem::path& out);

} // namespace repalloc
