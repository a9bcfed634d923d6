#pragma once

// Interest-driven server selection. Pairwise query history yields a similarity
// coefficient, which is blended with reputation into a score used to rank the
// peers a node sends its queries to.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "repalloc/reputation.hpp"
#include "repalloc/types.hpp"

namespace repalloc {

struct Interaction {
    std::uint64_t omega = 0;    // queries and transfers exchanged, either direction
    std::uint64_t answered = 0;
};

class InteractionStats {
public:
    InteractionStats() = default;
    explicit InteractionStats(NodeId owner) : owner_(owner) {}

    NodeId owner() const { return owner_; }
    void record(NodeId peer, bool answered);
    Interaction get(NodeId peer) const;
    const std::map<NodeId, Interaction>& peers() const { return peers_; }

private:
    NodeId owner_;
    std::map<NodeId, Interaction> peers_;
};

struct InterestTuning {
    double base_min = 2.0;
    double base_growth = 2.0;   // g_b
    double r_ok = 0.5;
    double r_high = 0.9;
    double alpha_high = 0.8;
    double alpha_low = 0.2;
    double alpha_decay = 0.95;
    std::int64_t warmup = 50;
    double churn_threshold = 0.5;
};

struct InterestConfig {
    double base = 10.0;
    double alpha = 0.8;
    std::size_t neighbor_count = 20;
    InterestTuning tuning;

    void validate() const;
};

/// v * log_base(omega + 1) while omega < base, v afterwards, where
/// v = answered / omega (zero when there is no history).
double similarity(std::uint64_t omega, std::uint64_t answered, double base);

double combined_score(double chi, double t, double alpha);

struct RankedServer {
    NodeId node;
    double score = 0.0;
};

/// Candidates ordered by combined score (descending, NodeId ascending on
/// ties), truncated to `neighbor_count`. Peers missing from the reputation
/// table are scored with `t_unknown`.
std::vector<RankedServer> rank_servers(const InteractionStats& stats,
                                       const ReputationTable& reputations,
                                       const InterestConfig& config,
                                       std::span<const NodeId> candidates,
                                       double t_unknown = 0.0);

double adapt_base(const InterestConfig& config, double answer_rate);

/// Alpha stays high for newcomers and after heavy churn in the ranked set,
/// and otherwise decays geometrically toward alpha_low.
double adapt_alpha(const InterestConfig& config, std::int64_t network_age, double churn);

/// Fraction of `current` not present in `previous`; 1 when `previous` is empty
/// and `current` is not.
double ranked_set_churn(std::span<const RankedServer> previous,
                        std::span<const RankedServer> current);

} // namespace repalloc
