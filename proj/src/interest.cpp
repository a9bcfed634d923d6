#include "repalloc/interest.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace repalloc {

void InteractionStats::record(NodeId peer, bool answered) {
    auto& entry = peers_[peer];
    entry.omega += 1;
    if (answered) entry.answered += 1;
}

Interaction InteractionStats::get(NodeId peer) const {
    auto it = peers_.find(peer);
    return it == peers_.end() ? Interaction{} : it->second;
}

void InterestConfig::validate() const {
    if (!(base > 1.0)) throw InvariantViolation("interest base must exceed 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvariantViolation("alpha must lie in [0,1]");
    if (!(tuning.base_min > 1.0)) throw InvariantViolation("base_min must exceed 1");
    if (!(tuning.base_growth > 1.0)) throw InvariantViolation("base_growth must exceed 1");
}

double similarity(std::uint64_t omega, std::uint64_t answered, double base) {
    if (answered > omega) throw InvariantViolation("answered exceeds omega");
    if (!(base > 1.0)) throw InvariantViolation("interest base must exceed 1");
    if (omega == 0) return 0.0;
    const double v = static_cast<double>(answered) / static_cast<double>(omega);
    const double om = static_cast<double>(omega);
    if (om < base) return v * std::log(om + 1.0) / std::log(base);
    return v;
}

double combined_score(double chi, double t, double alpha) {
    return alpha * chi + (1.0 - alpha) * t;
}

std::vector<RankedServer> rank_servers(const InteractionStats& stats,
                                       const ReputationTable& reputations,
                                       const InterestConfig& config,
                                       std::span<const NodeId> candidates, double t_unknown) {
    std::vector<RankedServer> ranked;
    ranked.reserve(candidates.size());
    for (NodeId peer : candidates) {
        const Interaction hist = stats.get(peer);
        const double chi = similarity(hist.omega, hist.answered, config.base);
        const double t = reputations.score_or(peer, t_unknown);
        ranked.push_back({peer, combined_score(chi, t, config.alpha)});
    }
    auto before = [](const RankedServer& a, const RankedServer& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    };
    const std::size_t keep = std::min(config.neighbor_count, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                      ranked.end(), before);
    ranked.resize(keep);
    return ranked;
}

double adapt_base(const InterestConfig& config, double answer_rate) {
    const InterestTuning& t = config.tuning;
    if (answer_rate < t.r_ok) return config.base * t.base_growth;
    if (answer_rate > t.r_high) return std::max(config.base / t.base_growth, t.base_min);
    return config.base;
}

double adapt_alpha(const InterestConfig& config, std::int64_t network_age, double churn) {
    const InterestTuning& t = config.tuning;
    if (network_age < t.warmup || churn >= t.churn_threshold) return t.alpha_high;
    return t.alpha_low + (config.alpha - t.alpha_low) * t.alpha_decay;
}

double ranked_set_churn(std::span<const RankedServer> previous,
                        std::span<const RankedServer> current) {
    if (current.empty()) return 0.0;
    std::unordered_set<NodeId> before;
    for (const auto& r : previous) before.insert(r.node);
    std::size_t fresh = 0;
    for (const auto& r : current)
        if (!before.contains(r.node)) ++fresh;
    return static_cast<double>(fresh) / static_cast<double>(current.size());
}

} // namespace repalloc
