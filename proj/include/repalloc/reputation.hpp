#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>

#include "repalloc/types.hpp"

namespace repalloc {

/// Thrown for transactions whose rate ratios are undefined (zero request or
/// zero min(accepted, feasible)). Callers skip such transactions.
class DegenerateTransaction : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ReputationSample {
    double t_raw = 0.0;
};

/// Request-size weighted, universally scaled single-transaction score:
///
///   (q_a / min(q_ay, q_f))^(1-eta) * (q_w_hat / q_r) * (q_r / q_rd) * (q_rd / Q_rd)
///
/// `q_rd` is the download capacity of the node doing the rating.
ReputationSample reputation_sample(const RateObservation& obs, double eta, double q_rd,
                                   double q_rd_universal);

struct ReputationEntry {
    double t = 0.0;
    std::int64_t last_update = 0;
    std::uint64_t n_obs = 0;
};

class ReputationTable {
public:
    ReputationTable() = default;
    explicit ReputationTable(NodeId owner) : owner_(owner) {}

    NodeId owner() const { return owner_; }

    /// Exponentially smoothed update; the first sample for a peer seeds its
    /// entry directly.
    void record_transaction(ReputationSample sample, NodeId peer, std::int64_t iteration,
                            double smoothing);

    std::optional<double> score(NodeId peer) const;
    double score_or(NodeId peer, double fallback) const;
    const ReputationEntry* find(NodeId peer) const;

    const std::map<NodeId, ReputationEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    NodeId owner_;
    std::map<NodeId, ReputationEntry> entries_;
};

/// Reputation rescaled by the owner's download capacity over the size of the
/// current request. Unknown peers use `t_newcomer`. The result is not clamped.
double effective_reputation(const ReputationTable& table, NodeId peer, double q_r_req,
                            double q_rd_owner, double t_newcomer);

} // namespace repalloc
