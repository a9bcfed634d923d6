#pragma once

// Shared vocabulary: node identities, per-transaction rate records and the
// network-wide constants every other module reads.

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace repalloc {

struct NodeId {
    std::uint32_t value = 0;

    friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

/// Raised when a record or parameter breaks one of its declared invariants.
/// The message names the offending field.
class InvariantViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One transaction's service rates, all in units per iteration.
/// `requester` asked `server` for `q_r`; the server was willing to give
/// `q_w_hat` and actually delivered `q_a`. `q_f` is what the path could carry
/// and `q_ay` is what the requester accepted.
struct RateObservation {
    NodeId requester;
    NodeId server;
    double q_r = 0.0;
    double q_w_hat = 0.0;
    double q_a = 0.0;
    double q_f = 0.0;
    double q_ay = 0.0;
    std::int64_t iteration = 0;
};

struct GlobalParams {
    double x = 0.75;            // reputation exponent
    double q_rd_universal = 0;  // Q_rd; 0 means "derive from the scenario"
    double eta_default = 0.5;
    double rep_smoothing = 0.3; // beta

    void validate() const;
};

enum class StrategyKind { honest, free_rider, over_requester };

struct Strategy {
    StrategyKind kind = StrategyKind::honest;
    double multiplier = 1.0;

    static Strategy honest() { return {}; }
    static Strategy free_rider() { return {StrategyKind::free_rider, 1.0}; }
    static Strategy over_requester(double m) { return {StrategyKind::over_requester, m}; }

    bool shares() const { return kind != StrategyKind::free_rider; }
    friend bool operator==(const Strategy&, const Strategy&) = default;
};

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& name);

struct NodeParams {
    NodeId node;
    double q_rd = 0.0; // download capacity
    double eta = 0.5;
    Strategy strategy;

    void validate() const;
};

/// Returns `obs` unchanged when every invariant holds against the
/// requester's download capacity; throws InvariantViolation otherwise.
const RateObservation& validate_observation(const RateObservation& obs,
                                            const NodeParams& requester);

} // namespace repalloc

template <>
struct std::hash<repalloc::NodeId> {
    std::size_t operator()(repalloc::NodeId id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value);
    }
};
