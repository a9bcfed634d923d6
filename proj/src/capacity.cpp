#include "repalloc/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repalloc/types.hpp"

namespace repalloc {

double initial_capacity(std::optional<double> perceived_demand, double download_capacity) {
    if (!(download_capacity > 0.0)) throw InvariantViolation("download capacity must be positive");
    if (perceived_demand) return *perceived_demand;
    return download_capacity / 2.0;
}

CapacityState make_capacity_state(double initial_share, double delta, double epsilon,
                                  int period) {
    if (!(delta > 0.0)) throw InvariantViolation("delta must be positive");
    if (!(epsilon >= 0.0)) throw InvariantViolation("epsilon must be non-negative");
    if (period < 1) throw InvariantViolation("review period must be >= 1");
    CapacityState s;
    s.shared = std::max(0.0, initial_share);
    s.delta = delta;
    s.epsilon = epsilon;
    s.period = period;
    return s;
}

Action next_action(Action curr, Action prev, double d_k, double d_prev, double epsilon) {
    const bool quiet = std::abs(d_k - d_prev) <= epsilon;
    if (quiet) {
        if (curr == prev || curr == Action::hold) return Action::decrease;
        if (curr == Action::increase && prev == Action::decrease) return Action::hold;
        // Rule 1: a cut that cost nothing means the share is still too large.
        // Rule 4: an increase that bought nothing is wasted share.
        return Action::decrease;
    }
    if (d_k > d_prev) return Action::increase;
    if (curr == Action::decrease) return Action::increase; // undo a harmful cut
    return Action::hold;
}

CapacityState review(CapacityState state, double d_k) {
    Action next;
    if (!state.has_baseline) {
        state.has_baseline = true;
        next = Action::decrease;
        state.curr = Action::hold;
    } else {
        next = next_action(state.curr, state.prev, d_k, state.d_prev, state.epsilon);
    }
    // A full step down is impossible below delta; step up instead so that
    // every review moves the share by exactly -delta, 0 or +delta.
    if (next == Action::decrease && state.shared < state.delta * (1.0 - 1e-12))
        next = Action::increase;

    state.prev = state.curr;
    state.curr = next;
    state.d_prev = d_k;
    state.d_curr = d_k;
    state.shared += state.delta * sign(next);
    state.reviews += 1;
    return state;
}

double tune_epsilon(double variance, const EpsilonTuning& tuning) {
    if (!(variance >= 0.0)) throw InvariantViolation("variance must be non-negative");
    return std::max(tuning.minimum, tuning.scale * std::sqrt(variance));
}

double sample_variance(std::span<const double> samples) {
    if (samples.size() < 2) return 0.0;
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    return ss / (n - 1.0);
}

} // namespace repalloc
