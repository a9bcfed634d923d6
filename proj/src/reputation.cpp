#include "repalloc/reputation.hpp"

#include <algorithm>
#include <cmath>

namespace repalloc {

ReputationSample reputation_sample(const RateObservation& obs, double eta, double q_rd,
                                   double q_rd_universal) {
    const double deliverable = std::min(obs.q_ay, obs.q_f);
    if (deliverable <= 0.0) throw DegenerateTransaction("min(q_ay,q_f) is zero");
    if (obs.q_r <= 0.0) throw DegenerateTransaction("q_r is zero");
    if (q_rd <= 0.0 || q_rd_universal <= 0.0)
        throw InvariantViolation("download capacities must be positive");

    const double delivery = std::pow(obs.q_a / deliverable, 1.0 - eta);
    const double willingness = obs.q_w_hat / obs.q_r;
    const double request_weight = obs.q_r / q_rd;
    const double scale = q_rd / q_rd_universal;
    return {delivery * willingness * request_weight * scale};
}

void ReputationTable::record_transaction(ReputationSample sample, NodeId peer,
                                         std::int64_t iteration, double smoothing) {
    auto [it, inserted] = entries_.try_emplace(peer);
    ReputationEntry& e = it->second;
    if (inserted) {
        e.t = sample.t_raw;
    } else {
        e.t = (1.0 - smoothing) * e.t + smoothing * sample.t_raw;
    }
    e.n_obs += 1;
    e.last_update = iteration;
}

std::optional<double> ReputationTable::score(NodeId peer) const {
    if (auto* e = find(peer)) return e->t;
    return std::nullopt;
}

double ReputationTable::score_or(NodeId peer, double fallback) const {
    return score(peer).value_or(fallback);
}

const ReputationEntry* ReputationTable::find(NodeId peer) const {
    auto it = entries_.find(peer);
    return it == entries_.end() ? nullptr : &it->second;
}

double effective_reputation(const ReputationTable& table, NodeId peer, double q_r_req,
                            double q_rd_owner, double t_newcomer) {
    if (q_r_req <= 0.0) throw InvariantViolation("zero request size");
    return table.score_or(peer, t_newcomer) * (q_rd_owner / q_r_req);
}

} // namespace repalloc
