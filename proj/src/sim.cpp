#include "repalloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace repalloc {

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::invalid_argument([&] {
          std::string msg = "invalid scenario:";
          for (const auto& v : violations) msg += "\n  - " + v;
          return msg;
      }()),
      violations_(std::move(violations)) {}

std::string to_string(SharePolicy p) {
    return p == SharePolicy::fixed ? "fixed" : "controller";
}

std::string to_string(RoutingMode m) {
    switch (m) {
    case RoutingMode::uniform: return "uniform";
    case RoutingMode::interest: return "interest";
    case RoutingMode::baseline: return "baseline";
    }
    return "uniform";
}

SharePolicy share_policy_from_string(const std::string& s) {
    if (s == "fixed") return SharePolicy::fixed;
    if (s == "controller") return SharePolicy::controller;
    throw InvariantViolation("unknown share policy '" + s + "'");
}

RoutingMode routing_mode_from_string(const std::string& s) {
    if (s == "uniform") return RoutingMode::uniform;
    if (s == "interest") return RoutingMode::interest;
    if (s == "baseline") return RoutingMode::baseline;
    throw InvariantViolation("unknown routing mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// ScenarioConfig

std::size_t ScenarioConfig::free_rider_count() const {
    return static_cast<std::size_t>(
        std::llround(free_rider_pct * static_cast<double>(n_nodes) / 100.0));
}

std::vector<NodeGroup> ScenarioConfig::resolved_groups() const {
    std::vector<NodeGroup> out = groups;
    if (out.empty()) {
        NodeGroup all;
        all.count = n_nodes;
        out.push_back(all);
    }
    std::size_t riders = std::min(free_rider_count(), n_nodes);
    if (riders > 0) {
        NodeGroup rider = out.back();
        rider.name = "free-rider";
        rider.count = riders;
        rider.policy = SharePolicy::fixed;
        rider.shared_capacity = 0.0;
        rider.strategy = Strategy::free_rider();
        for (auto it = out.rbegin(); it != out.rend() && riders > 0; ++it) {
            const std::size_t take = std::min(it->count, riders);
            it->count -= take;
            riders -= take;
        }
        std::erase_if(out, [](const NodeGroup& g) { return g.count == 0; });
        out.push_back(rider);
    }
    return out;
}

double ScenarioConfig::universal_scale() const {
    if (global.q_rd_universal > 0.0) return global.q_rd_universal;
    double scale = 0.0;
    for (const auto& g : resolved_groups()) scale = std::max(scale, g.download_capacity);
    return scale;
}

double ScenarioConfig::newcomer_reputation() const {
    if (t_newcomer > 0.0) return t_newcomer;
    double mean_request = allocation_unit;
    if (routing.mode == RoutingMode::uniform)
        mean_request = 0.5 * (demand.min + demand.max) /
                       static_cast<double>(std::max<std::size_t>(1, routing.servers_per_request));
    const double scale = universal_scale();
    return scale > 0.0 ? 0.5 * mean_request / scale : 0.0;
}

std::vector<std::string> ScenarioConfig::violations() const {
    std::vector<std::string> v;
    auto check = [&](bool ok, std::string msg) {
        if (!ok) v.push_back(std::move(msg));
    };
    auto guarded = [&](auto&& fn, const std::string& where) {
        try {
            fn();
        } catch (const InvariantViolation& e) {
            v.push_back(where + ": " + e.what());
        }
    };

    check(n_nodes >= 2, "n_nodes must be >= 2");
    check(iterations >= 0, "iterations must be >= 0");
    check(acquaintance >= 0, "acquaintance must be >= 0");
    if (iterations > 0) check(acquaintance < iterations, "acquaintance must be < iterations");
    check(free_rider_pct >= 0.0 && free_rider_pct <= 100.0, "free_rider_pct must lie in [0,100]");

    if (!groups.empty()) {
        std::size_t total = 0;
        for (const auto& g : groups) total += g.count;
        check(total == n_nodes,
              fmt::format("group counts sum to {} but n_nodes is {}", total, n_nodes));
    }
    double max_download = 0.0;
    double min_download = std::numeric_limits<double>::infinity();
    for (const auto& g : groups) {
        const std::string where = "group '" + g.name + "'";
        check(std::isfinite(g.download_capacity) && g.download_capacity > 0.0,
              where + ": download_capacity must be positive");
        check(g.shared_capacity >= 0.0, where + ": shared_capacity must be >= 0");
        check(g.strategy.multiplier >= 1.0, where + ": multiplier must be >= 1");
        if (g.strategy.kind == StrategyKind::over_requester)
            check(g.strategy.multiplier > 1.0, where + ": over-requester multiplier must be > 1");
        if (g.eta) check(*g.eta >= 0.0 && *g.eta < 1.0, where + ": eta must lie in [0,1)");
        max_download = std::max(max_download, g.download_capacity);
        min_download = std::min(min_download, g.download_capacity);
    }
    if (groups.empty()) max_download = min_download = NodeGroup{}.download_capacity;

    check(demand.min > 0.0 && demand.min <= demand.max, "demand requires 0 < min <= max");
    check(demand.max <= min_download, "demand.max must not exceed any download capacity");
    check(allocation_unit > 0.0, "allocation_unit must be positive");
    check(t_newcomer >= 0.0, "t_newcomer must be >= 0");

    check(routing.candidate_pool >= 1, "routing.candidate_pool must be >= 1");
    check(routing.servers_per_request >= 1, "routing.servers_per_request must be >= 1");
    check(routing.servers_per_request <= routing.candidate_pool,
          "routing.servers_per_request must not exceed routing.candidate_pool");
    check(routing.ttl >= 1, "routing.ttl must be >= 1");

    if (routing.mode != RoutingMode::uniform) {
        check(content.categories >= 1, "content.categories must be >= 1");
        check(content.interests_per_node >= 1 && content.interests_per_node <= content.categories,
              "content.interests_per_node must lie in [1, categories]");
        check(content.files_per_category >= 1, "content.files_per_category must be >= 1");
        check(content.holdings_per_interest <= content.files_per_category,
              "content.holdings_per_interest must not exceed files_per_category");
        check(content.queries_per_iteration >= 1, "content.queries_per_iteration must be >= 1");
    }

    guarded([&] { global.validate(); }, "params");
    if (global.q_rd_universal > 0.0)
        check(global.q_rd_universal >= max_download,
              "params.Q_rd must be >= every download capacity");
    guarded([&] { interest.validate(); }, "interest");
    check(interest.neighbor_count >= 1, "interest.neighbor_count must be >= 1");

    check(allocator.nu > 0.0, "allocator.nu must be positive");
    check(allocator.theta >= 0.0, "allocator.theta must be >= 0");
    check(allocator.tau >= 0, "allocator.tau must be >= 0");
    check(allocator.control.window >= 1, "allocator.window must be >= 1");
    check(allocator.control.nu_min > 0.0 && allocator.control.nu_min <= allocator.control.nu_max,
          "allocator requires 0 < nu_min <= nu_max");
    check(capacity.delta_fraction > 0.0, "capacity.delta_fraction must be positive");
    check(capacity.period >= 1, "capacity.period must be >= 1");
    check(capacity.epsilon.minimum >= 0.0, "capacity.epsilon_min must be >= 0");
    check(adapt_window >= 1, "adapt_window must be >= 1");
    check(dump_interval >= 0, "dump_interval must be >= 0");
    return v;
}

void ScenarioConfig::validate() const {
    auto v = violations();
    if (!v.empty()) throw ConfigError(std::move(v));
}

void MetricsSeries::append(MetricsSeries&& other) {
    if (group_names.empty()) group_names = std::move(other.group_names);
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    reviews.insert(reviews.end(), other.reviews.begin(), other.reviews.end());
    reputation_dumps.insert(reputation_dumps.end(), other.reputation_dumps.begin(),
                            other.reputation_dumps.end());
    neighbor_dumps.insert(neighbor_dumps.end(), other.neighbor_dumps.begin(),
                          other.neighbor_dumps.end());
}

std::int64_t SimNode::shared_units(double unit) const {
    return static_cast<std::int64_t>(std::floor(capacity.shared / unit + 1e-9));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace

std::uint64_t node_seed(std::uint64_t scenario_seed, NodeId node) {
    return splitmix64(splitmix64(scenario_seed) ^ splitmix64(0xA5A5ULL + node.value));
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(ScenarioConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto groups = config_.resolved_groups();
    q_rd_universal_ = config_.universal_scale();
    t_newcomer_ = config_.newcomer_reputation();
    const bool catalog = config_.routing.mode != RoutingMode::uniform;
    if (catalog) file_count_ = config_.content.categories * config_.content.files_per_category;

    nodes_.reserve(config_.n_nodes);
    std::uint32_t next = 0;
    for (std::uint32_t g = 0; g < groups.size(); ++g) {
        const NodeGroup& group = groups[g];
        group_names_.push_back(group.name);
        for (std::size_t c = 0; c < group.count; ++c) {
            const NodeId id{next++};
            SimNode n;
            n.params = {id, group.download_capacity, group.eta.value_or(config_.global.eta_default),
                        group.strategy};
            n.params.validate();
            n.group = g;
            n.rng.seed(node_seed(config_.seed, id));
            const bool shares = group.strategy.shares();
            n.controller = shares && group.policy == SharePolicy::controller;
            const double share = shares ? group.shared_capacity : 0.0;
            n.capacity = make_capacity_state(share,
                                             config_.capacity.delta_fraction * n.params.q_rd,
                                             config_.capacity.epsilon.minimum,
                                             config_.capacity.period);
            n.allocator.nu = config_.allocator.nu;
            n.allocator.delta_units = config_.allocation_unit;
            n.allocator.theta = config_.allocator.theta;
            n.allocator.tau = config_.allocator.tau;
            n.allocator.control = config_.allocator.control;
            n.allocator.shared_units = n.shared_units(config_.allocation_unit);
            n.reputation = ReputationTable(id);
            n.interactions = InteractionStats(id);
            n.interest = config_.interest;

            if (catalog) {
                const auto& cm = config_.content;
                std::vector<std::uint32_t> cats(cm.categories);
                std::iota(cats.begin(), cats.end(), 0u);
                std::shuffle(cats.begin(), cats.end(), n.rng);
                n.interests.assign(cats.begin(),
                                   cats.begin() + static_cast<std::ptrdiff_t>(cm.interests_per_node));
                n.holds.assign(file_count_, false);
                std::vector<std::uint32_t> idx(cm.files_per_category);
                for (std::uint32_t cat : n.interests) {
                    std::iota(idx.begin(), idx.end(), 0u);
                    std::shuffle(idx.begin(), idx.end(), n.rng);
                    for (std::size_t h = 0; h < cm.holdings_per_interest; ++h)
                        n.holds[cat * cm.files_per_category + idx[h]] = true;
                }
            }
            nodes_.push_back(std::move(n));
        }
    }
}

bool Simulation::holds(NodeId node, FileId file) const {
    const SimNode& n = nodes_.at(node.value);
    if (n.holds.empty()) return true; // uniform content: every node holds everything
    return file < n.holds.size() && n.holds[file];
}

std::vector<NodeId> Simulation::holders(FileId file) const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_)
        if (holds(n.params.node, file)) out.push_back(n.params.node);
    return out;
}

std::vector<NodeId> Simulation::sample_peers(SimNode& node, std::size_t count) {
    const std::size_t n = nodes_.size();
    count = std::min(count, n - 1);
    std::vector<NodeId> out;
    out.reserve(count);
    while (out.size() < count) {
        const NodeId peer{static_cast<std::uint32_t>(uniform_index(node.rng, n))};
        if (peer == node.params.node) continue;
        if (std::find(out.begin(), out.end(), peer) != out.end()) continue;
        out.push_back(peer);
    }
    return out;
}

QueryOutcome Simulation::query_routing_trial(NodeId querier, FileId file, RoutingMode mode) {
    SimNode& q = nodes_.at(querier.value);
    const std::size_t ttl = config_.routing.ttl;
    scratch_.assign(nodes_.size(), 0);
    scratch_[querier.value] = 1;

    QueryOutcome out;
    auto probe = [&](NodeId peer) {
        ++out.probes;
        const bool hit = holds(peer, file);
        q.interactions.record(peer, hit);
        nodes_[peer.value].interactions.record(querier, hit);
        if (hit) {
            out.resolved = true;
            out.holder = peer;
        }
        return hit;
    };

    if (mode == RoutingMode::interest) {
        for (const auto& ranked : q.neighbors) {
            if (out.probes >= ttl) return out;
            if (scratch_[ranked.node.value]) continue;
            scratch_[ranked.node.value] = 1;
            if (probe(ranked.node)) return out;
        }
    }

    std::vector<NodeId> rest;
    rest.reserve(nodes_.size());
    for (std::uint32_t i = 0; i < nodes_.size(); ++i)
        if (!scratch_[i]) rest.push_back(NodeId{i});
    for (std::size_t i = 0; i < rest.size() && out.probes < ttl; ++i) {
        const std::size_t j = i + uniform_index(q.rng, rest.size() - i);
        std::swap(rest[i], rest[j]);
        if (probe(rest[i])) return out;
    }
    return out;
}

void Simulation::send_request(NodeId requester, NodeId server, std::int64_t units) {
    SimNode& s = nodes_[server.value];
    const SimNode& r = nodes_[requester.value];
    const double unit = config_.allocation_unit;
    const auto max_units = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(r.params.q_rd / unit + 1e-9)));
    units = std::clamp<std::int64_t>(units, 1, max_units);

    std::int64_t total = units;
    for (const auto& p : s.allocator.pending)
        if (p.requester == requester) total = std::min(total + p.q_r_units, max_units);
    const double t_eff = effective_reputation(s.reputation, requester,
                                              static_cast<double>(total) * unit, s.params.q_rd,
                                              t_newcomer_);
    s.allocator.enqueue({requester, units, iteration_, t_eff}, max_units);
}

void Simulation::issue_uniform(SimNode& node) {
    const double unit = config_.allocation_unit;
    const auto lo = std::max<std::int64_t>(1, std::llround(config_.demand.min / unit));
    const auto hi = std::max<std::int64_t>(lo, std::llround(config_.demand.max / unit));
    const std::int64_t need = std::uniform_int_distribution<std::int64_t>(lo, hi)(node.rng);

    const auto candidates = sample_peers(node, config_.routing.candidate_pool);
    InterestConfig pick = node.interest;
    pick.neighbor_count = config_.routing.servers_per_request;
    const auto servers =
        rank_servers(node.interactions, node.reputation, pick, candidates, t_newcomer_);

    const auto parts = std::min<std::int64_t>(static_cast<std::int64_t>(servers.size()), need);
    const std::int64_t base = need / parts;
    const std::int64_t extra = need % parts;
    for (std::int64_t i = 0; i < parts; ++i) {
        const std::int64_t share = base + (i < extra ? 1 : 0);
        const auto asked = std::llround(static_cast<double>(share) * node.params.strategy.multiplier);
        send_request(node.params.node, servers[static_cast<std::size_t>(i)].node, asked);
    }
}

void Simulation::issue_queries(SimNode& node, NodeIterationRow& row) {
    const auto& cm = config_.content;
    for (std::size_t q = 0; q < cm.queries_per_iteration; ++q) {
        const std::uint32_t cat = node.interests[uniform_index(node.rng, node.interests.size())];
        std::vector<FileId> wanted;
        for (std::size_t f = 0; f < cm.files_per_category; ++f) {
            const auto file = static_cast<FileId>(cat * cm.files_per_category + f);
            if (!node.holds[file]) wanted.push_back(file);
        }
        if (wanted.empty()) continue;
        const FileId file = wanted[uniform_index(node.rng, wanted.size())];
        const std::size_t known = node.neighbors.size();
        const QueryOutcome outcome =
            query_routing_trial(node.params.node, file, config_.routing.mode);
        row.queries += 1;
        node.window_requests += 1;
        if (!outcome.resolved) continue;
        row.resolved += 1;
        row.probes += static_cast<std::int64_t>(outcome.probes);
        if (config_.routing.mode == RoutingMode::interest && outcome.probes <= known)
            node.window_answered += 1;
        const auto asked = std::llround(node.params.strategy.multiplier);
        send_request(node.params.node, *outcome.holder, asked);
    }
}

void Simulation::issue_requests(std::vector<NodeIterationRow>& rows) {
    for (auto& node : nodes_) {
        if (config_.routing.mode == RoutingMode::uniform)
            issue_uniform(node);
        else
            issue_queries(node, rows[node.params.node.value]);
    }
}

void Simulation::serve(std::vector<Decision>& decisions, std::vector<NodeIterationRow>& rows) {
    const bool acquainting = iteration_ < config_.acquaintance;
    const double x = config_.global.x;
    for (auto& s : nodes_) {
        AllocatorState& a = s.allocator;
        NodeIterationRow& row = rows[s.params.node.value];
        if (a.pending.empty()) continue;
        a.shared_units = s.shared_units(config_.allocation_unit);

        if (!s.params.strategy.shares() || a.shared_units == 0) {
            for (const auto& r : a.pending) decisions.push_back({s.params.node, r, 0});
            a.pending.clear();
            continue;
        }

        s.window_offered += a.shared_units;
        const bool go = acquainting ||
                        serving_trigger(a.pending, a.theta, a.oldest_wait(iteration_), a.tau);
        if (!go) {
            row.pending = a.pending.size();
            continue;
        }
        const std::vector<AllocationRequest> selected =
            acquainting ? a.pending : select_requesters(a.pending, x, a.nu, s.rng);
        const AllocationGrant grant = allocate_capacity(selected, a.shared_units, x);

        std::int64_t served = 0;
        std::int64_t selected_demand = 0;
        for (const auto& r : selected) selected_demand += r.q_r_units;
        for (const auto& r : a.pending) {
            auto it = grant.find(r.requester);
            const std::int64_t g = it == grant.end() ? 0 : it->second;
            served += g;
            decisions.push_back({s.params.node, r, g});
        }
        row.served = served;
        row.selected = selected.size();
        row.utilization = static_cast<double>(served) / static_cast<double>(a.shared_units);
        s.window_granted += served;
        s.window_selected_demand += selected_demand;
        a.pending.clear();
    }
}

void Simulation::apply_decisions(const std::vector<Decision>& decisions,
                                 std::vector<NodeIterationRow>& rows) {
    const double unit = config_.allocation_unit;
    for (const auto& d : decisions) {
        SimNode& r = nodes_[d.request.requester.value];
        SimNode& s = nodes_[d.server.value];
        const double asked = static_cast<double>(d.request.q_r_units) * unit;
        const double given = static_cast<double>(d.granted) * unit;
        RateObservation obs{r.params.node, s.params.node, asked, given, given, asked, asked,
                            iteration_};
        validate_observation(obs, r.params);
        const ReputationSample sample =
            reputation_sample(obs, r.params.eta, r.params.q_rd, q_rd_universal_);
        r.reputation.record_transaction(sample, s.params.node, iteration_,
                                        config_.global.rep_smoothing);
        r.interactions.record(s.params.node, d.granted > 0);
        s.interactions.record(r.params.node, d.granted > 0);

        NodeIterationRow& row = rows[r.params.node.value];
        row.requested += d.request.q_r_units;
        row.received += d.granted;
        if (config_.routing.mode == RoutingMode::uniform) {
            r.window_requests += 1;
            if (d.granted > 0) r.window_answered += 1;
        }
    }
}

void Simulation::refresh_neighbors(SimNode& node) {
    std::vector<NodeId> candidates;
    for (const auto& [peer, _] : node.interactions.peers()) candidates.push_back(peer);
    for (const auto& [peer, _] : node.reputation.entries())
        if (!node.interactions.peers().contains(peer)) candidates.push_back(peer);
    node.neighbors =
        rank_servers(node.interactions, node.reputation, node.interest, candidates, t_newcomer_);
}

void Simulation::periodic(MetricsSeries& out) {
    const std::int64_t done = iteration_ + 1;
    const bool acquainting = iteration_ < config_.acquaintance;
    for (auto& node : nodes_) {
        if (node.controller) {
            node.period_received.push_back(
                static_cast<double>(out.rows[node.params.node.value].received));
            if (done % node.capacity.period == 0) {
                const auto& samples = node.period_received;
                const double d_k = std::accumulate(samples.begin(), samples.end(), 0.0) /
                                   static_cast<double>(samples.size());
                node.capacity.epsilon =
                    tune_epsilon(sample_variance(samples), config_.capacity.epsilon);
                node.capacity = review(node.capacity, d_k);
                node.period_received.clear();
                out.reviews.push_back({node.params.node, node.capacity.reviews, iteration_,
                                       node.capacity.shared, sign(node.capacity.curr), d_k});
            }
        }

        if (done % config_.adapt_window == 0) {
            if (!acquainting && node.params.strategy.shares() && node.window_offered > 0) {
                const double util = static_cast<double>(node.window_granted) /
                                    static_cast<double>(node.window_offered);
                // Whether the capacity offered over the window could cover what
                // the selected requesters asked for.
                const double fulfil =
                    node.window_selected_demand > node.window_offered
                        ? static_cast<double>(node.window_offered) /
                              static_cast<double>(node.window_selected_demand)
                        : 1.0;
                node.allocator.nu = adjust_nu(node.allocator, util, fulfil);
            }
            if (node.window_requests > 0)
                node.interest.base =
                    adapt_base(node.interest, static_cast<double>(node.window_answered) /
                                                  static_cast<double>(node.window_requests));
            double churn = 0.0;
            if (config_.routing.mode == RoutingMode::interest) {
                const auto previous = node.neighbors;
                refresh_neighbors(node);
                churn = ranked_set_churn(previous, node.neighbors);
            }
            node.interest.alpha = adapt_alpha(node.interest, done, churn);
            node.window_granted = node.window_offered = node.window_selected_demand = 0;
            node.window_requests = node.window_answered = 0;
        }
    }

    if (config_.dump_interval > 0 && done % config_.dump_interval == 0) {
        for (const auto& node : nodes_) {
            for (const auto& [peer, e] : node.reputation.entries())
                out.reputation_dumps.push_back({iteration_, node.params.node, peer, e.t, e.n_obs});
            for (std::uint32_t rank = 0; rank < node.neighbors.size(); ++rank)
                out.neighbor_dumps.push_back({iteration_, node.params.node, rank,
                                              node.neighbors[rank].node,
                                              node.neighbors[rank].score});
        }
    }
}

MetricsSeries Simulation::step() {
    if (iteration_ >= config_.iterations)
        throw InvariantViolation("step called past the configured iteration count");
    MetricsSeries out;
    out.group_names = group_names_;
    out.rows.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        out.rows[i].iteration = iteration_;
        out.rows[i].node = nodes_[i].params.node;
        out.rows[i].group = nodes_[i].group;
        out.rows[i].shared = nodes_[i].capacity.shared;  // share in effect while serving
    }

    issue_requests(out.rows);
    std::vector<Decision> decisions;
    serve(decisions, out.rows);
    apply_decisions(decisions, out.rows);
    periodic(out);

    for (std::size_t i = 0; i < nodes_.size(); ++i) out.rows[i].nu = nodes_[i].allocator.nu;
    ++iteration_;
    return out;
}

MetricsSeries run(const ScenarioConfig& config) {
    Simulation sim(config);
    MetricsSeries series;
    series.group_names = sim.group_names();
    while (sim.iteration() < config.iterations) series.append(sim.step());
    return series;
}

} // namespace repalloc
