#pragma once

// Periodic self-tuning of a node's shared upload capacity. Every review period
// the node nudges its shared capacity by +/-delta and watches whether its own
// average download responds, settling at the smallest share that still buys
// the download it can get.

#include <optional>
#include <span>

namespace repalloc {

enum class Action : int { decrease = -1, hold = 0, increase = 1 };

constexpr int sign(Action a) { return static_cast<int>(a); }

struct CapacityState {
    double shared = 0.0;              // U_s
    Action prev = Action::hold;       // action before the one just measured
    Action curr = Action::decrease;   // action in effect during the period just measured
    double d_prev = 0.0;
    double d_curr = 0.0;
    bool has_baseline = false;
    double delta = 1.0;
    double epsilon = 1.0;
    int period = 10;                  // T, iterations per review
    long reviews = 0;
};

struct EpsilonTuning {
    double scale = 1.0;     // c_eps
    double minimum = 1.0;   // eps_min
};

/// Starting share: the perceived demand when known, otherwise half the
/// download capacity.
double initial_capacity(std::optional<double> perceived_demand, double download_capacity);

CapacityState make_capacity_state(double initial_share, double delta, double epsilon,
                                  int period);

/// Decides the next action from the download just measured (`d_k`), then
/// applies it to the shared capacity for the coming period.
///
/// The first review only records the baseline and starts with a decrease.
/// Decision table, with "significant" meaning |d_k - d_prev| > epsilon:
///   quiet, (curr == prev or curr == hold)            -> decrease
///   quiet, curr == increase, prev == decrease        -> hold
///   drop, curr == decrease, prev == increase         -> increase
///   rise                                             -> increase
/// and the rows the listing leaves open:
///   quiet, curr == decrease, prev != decrease        -> decrease
///   quiet, curr == increase, prev == hold            -> decrease
///   drop, curr == decrease, prev != increase         -> increase
///   drop, curr in {hold, increase}                   -> hold
/// A decrease requested with less than delta left becomes an increase, so the
/// share never goes negative.
CapacityState review(CapacityState state, double d_k);

/// Decision step alone, without history or share updates.
Action next_action(Action curr, Action prev, double d_k, double d_prev, double epsilon);

/// eps = scale * sqrt(variance), floored at the minimum.
double tune_epsilon(double variance, const EpsilonTuning& tuning = {});

double sample_variance(std::span<const double> samples);

} // namespace repalloc
