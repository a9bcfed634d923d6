#pragma once

// Deterministic discrete-time simulation of a reputation-driven sharing
// network. Every node is simultaneously a requester and a server; one call to
// Simulation::step advances all nodes by one iteration.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "repalloc/allocator.hpp"
#include "repalloc/capacity.hpp"
#include "repalloc/interest.hpp"
#include "repalloc/reputation.hpp"
#include "repalloc/types.hpp"

namespace repalloc {

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

enum class SharePolicy { fixed, controller };
enum class RoutingMode { uniform, interest, baseline };

std::string to_string(SharePolicy p);
std::string to_string(RoutingMode m);
SharePolicy share_policy_from_string(const std::string& s);
RoutingMode routing_mode_from_string(const std::string& s);

struct NodeGroup {
    std::string name = "all";
    std::size_t count = 0;
    double download_capacity = 100.0;
    SharePolicy policy = SharePolicy::fixed;
    double shared_capacity = 20.0;  // fixed share, or the controller's start
    Strategy strategy;
    std::optional<double> eta;
};

struct DemandModel {
    double min = 20.0;  // per node, units per iteration
    double max = 40.0;
};

struct RoutingConfig {
    RoutingMode mode = RoutingMode::uniform;
    std::size_t candidate_pool = 4;        // peers sampled per iteration (uniform mode)
    std::size_t servers_per_request = 3;   // servers a demand is split across
    std::size_t ttl = 200;                 // probe cap per query
};

/// File catalog used by the query-routing modes. Every file is one unit.
struct ContentModel {
    std::size_t categories = 20;
    std::size_t interests_per_node = 2;
    std::size_t files_per_category = 50;
    std::size_t holdings_per_interest = 10;
    std::size_t queries_per_iteration = 1;
};

struct AllocatorDefaults {
    double nu = 1.0;
    double theta = 1.0;
    std::int64_t tau = 3;
    NuControl control;
};

struct CapacityDefaults {
    double delta_fraction = 0.05;  // of download capacity
    int period = 10;
    EpsilonTuning epsilon;
};

struct ScenarioConfig {
    std::size_t n_nodes = 200;
    std::int64_t iterations = 500;
    std::int64_t acquaintance = 50;
    std::uint64_t seed = 1;
    double free_rider_pct = 0.0;
    std::vector<NodeGroup> groups;  // empty: one honest group of n_nodes
    DemandModel demand;
    RoutingConfig routing;
    ContentModel content;
    GlobalParams global;
    double allocation_unit = 1.0;   // Delta
    double t_newcomer = 0.0;        // 0: half the mean request over Q_rd
    AllocatorDefaults allocator;
    CapacityDefaults capacity;
    InterestConfig interest;
    std::int64_t adapt_window = 10;
    std::int64_t dump_interval = 0; // 0 disables reputation/neighbor dumps

    /// Groups after defaults and free-rider conversion. Free riders are taken
    /// from the highest NodeIds and reported as a trailing "free-rider" group.
    std::vector<NodeGroup> resolved_groups() const;
    std::size_t free_rider_count() const;
    double universal_scale() const;     // Q_rd
    double newcomer_reputation() const;
    std::vector<std::string> violations() const;
    void validate() const;              // throws ConfigError
};

struct NodeIterationRow {
    std::int64_t iteration = 0;
    NodeId node;
    std::uint32_t group = 0;
    std::int64_t requested = 0;   // units of this node's requests decided this iteration
    std::int64_t received = 0;
    std::int64_t served = 0;
    double shared = 0.0;
    std::size_t pending = 0;      // left waiting at this server after the round
    std::size_t selected = 0;
    double utilization = 0.0;
    double nu = 0.0;
    std::int64_t queries = 0;
    std::int64_t resolved = 0;
    std::int64_t probes = 0;      // probes spent on resolved queries
};

struct CapacityReviewRow {
    NodeId node;
    long k = 0;
    std::int64_t iteration = 0;
    double shared = 0.0;
    int action = 0;
    double d_k = 0.0;
};

struct ReputationDumpRow {
    std::int64_t iteration = 0;
    NodeId owner;
    NodeId peer;
    double t = 0.0;
    std::uint64_t n_obs = 0;
};

struct NeighborDumpRow {
    std::int64_t iteration = 0;
    NodeId owner;
    std::uint32_t rank = 0;
    NodeId peer;
    double score = 0.0;
};

struct MetricsSeries {
    std::vector<std::string> group_names;
    std::vector<NodeIterationRow> rows;
    std::vector<CapacityReviewRow> reviews;
    std::vector<ReputationDumpRow> reputation_dumps;
    std::vector<NeighborDumpRow> neighbor_dumps;

    void append(MetricsSeries&& other);
};

using FileId = std::uint32_t;

struct SimNode {
    NodeParams params;
    std::uint32_t group = 0;
    bool controller = false;
    CapacityState capacity;
    ReputationTable reputation;
    AllocatorState allocator;
    InteractionStats interactions;
    InterestConfig interest;
    std::vector<RankedServer> neighbors;
    Rng rng;
    std::vector<std::uint32_t> interests;
    std::vector<bool> holds;

    // Accumulators reset by the periodic controllers.
    std::int64_t window_granted = 0;
    std::int64_t window_offered = 0;
    std::int64_t window_selected_demand = 0;
    std::int64_t window_requests = 0;
    std::int64_t window_answered = 0;
    std::vector<double> period_received;

    std::int64_t shared_units(double unit) const;
};

struct QueryOutcome {
    std::size_t probes = 0;
    bool resolved = false;
    std::optional<NodeId> holder;
};

/// Per-node random stream seed derived from the scenario seed and the node.
std::uint64_t node_seed(std::uint64_t scenario_seed, NodeId node);

class Simulation {
public:
    explicit Simulation(ScenarioConfig config);

    const ScenarioConfig& config() const { return config_; }
    std::int64_t iteration() const { return iteration_; }
    const std::vector<SimNode>& nodes() const { return nodes_; }
    const SimNode& node(NodeId id) const { return nodes_.at(id.value); }
    const std::vector<std::string>& group_names() const { return group_names_; }
    double universal_scale() const { return q_rd_universal_; }
    double newcomer_reputation() const { return t_newcomer_; }

    /// Advances one iteration and returns the rows it produced.
    MetricsSeries step();

    /// Probes peers for `file`: the querier's ranked neighbors then random
    /// peers (interest mode), or a uniformly random order (baseline mode),
    /// until a holder answers or the TTL is spent. Each probe is recorded in
    /// both parties' interaction statistics.
    QueryOutcome query_routing_trial(NodeId querier, FileId file, RoutingMode mode);

    bool holds(NodeId node, FileId file) const;
    std::size_t file_count() const { return file_count_; }
    std::vector<NodeId> holders(FileId file) const;

private:
    struct Decision {
        NodeId server;
        AllocationRequest request;
        std::int64_t granted = 0;
    };

    void issue_requests(std::vector<NodeIterationRow>& rows);
    void issue_uniform(SimNode& node);
    void issue_queries(SimNode& node, NodeIterationRow& row);
    void send_request(NodeId requester, NodeId server, std::int64_t units);
    void serve(std::vector<Decision>& decisions, std::vector<NodeIterationRow>& rows);
    void apply_decisions(const std::vector<Decision>& decisions,
                         std::vector<NodeIterationRow>& rows);
    void periodic(MetricsSeries& out);
    void refresh_neighbors(SimNode& node);
    std::vector<NodeId> sample_peers(SimNode& node, std::size_t count);

    ScenarioConfig config_;
    std::vector<std::string> group_names_;
    std::vector<SimNode> nodes_;
    double q_rd_universal_ = 0.0;
    double t_newcomer_ = 0.0;
    std::size_t file_count_ = 0;
    std::int64_t iteration_ = 0;
    std::vector<char> scratch_;
};

/// Builds the network and steps through every iteration.
MetricsSeries run(const ScenarioConfig& config);

} // namespace repalloc
