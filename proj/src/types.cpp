#include "repalloc/types.hpp"

#include <algorithm>
#include <cmath>

namespace repalloc {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw InvariantViolation(message);
}

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace

void GlobalParams::validate() const {
    require(x > 0.0 && x <= 1.0, "x must lie in (0,1]");
    require(finite_non_negative(q_rd_universal), "Q_rd must be non-negative");
    require(eta_default >= 0.0 && eta_default < 1.0, "eta_default must lie in [0,1)");
    require(rep_smoothing > 0.0 && rep_smoothing <= 1.0, "rep_smoothing must lie in (0,1]");
}

std::string to_string(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::honest: return "honest";
    case StrategyKind::free_rider: return "free-rider";
    case StrategyKind::over_requester: return "over-requester";
    }
    return "honest";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
    if (name == "honest") return StrategyKind::honest;
    if (name == "free-rider") return StrategyKind::free_rider;
    if (name == "over-requester") return StrategyKind::over_requester;
    throw InvariantViolation("unknown strategy '" + name + "'");
}

void NodeParams::validate() const {
    require(std::isfinite(q_rd) && q_rd > 0.0, "q_rd must be positive");
    require(eta >= 0.0 && eta < 1.0, "eta must lie in [0,1)");
    require(strategy.multiplier >= 1.0, "strategy multiplier must be >= 1");
}

const RateObservation& validate_observation(const RateObservation& obs,
                                            const NodeParams& requester) {
    require(finite_non_negative(obs.q_r), "q_r must be non-negative");
    require(finite_non_negative(obs.q_w_hat), "q_w_hat must be non-negative");
    require(finite_non_negative(obs.q_a), "q_a must be non-negative");
    require(finite_non_negative(obs.q_f), "q_f must be non-negative");
    require(finite_non_negative(obs.q_ay), "q_ay must be non-negative");
    require(obs.q_r > 0.0, "q_r must be positive for a recorded observation");
    require(obs.q_a <= std::min(obs.q_ay, obs.q_f), "q_a exceeds min(q_ay,q_f)");
    require(obs.q_w_hat <= obs.q_r, "q_w_hat exceeds q_r");
    require(obs.q_r <= requester.q_rd, "request exceeds download capacity");
    return obs;
}

} // namespace repalloc
