#include "repalloc/allocator.hpp"

#include <algorithm>
#include <cmath>

namespace repalloc {

bool canonical_before(const AllocationRequest& a, const AllocationRequest& b) {
    if (a.t_eff != b.t_eff) return a.t_eff > b.t_eff;
    return a.requester < b.requester;
}

void sort_canonical(std::vector<AllocationRequest>& requests) {
    std::stable_sort(requests.begin(), requests.end(), canonical_before);
}

void AllocatorState::enqueue(const AllocationRequest& request, std::int64_t max_units) {
    if (request.q_r_units < 1) throw InvariantViolation("q_r_units must be >= 1");
    auto same = std::find_if(pending.begin(), pending.end(), [&](const AllocationRequest& r) {
        return r.requester == request.requester;
    });
    AllocationRequest merged = request;
    if (same != pending.end()) {
        merged.q_r_units = std::min(merged.q_r_units + same->q_r_units, max_units);
        merged.arrival = std::min(same->arrival, request.arrival);
        pending.erase(same);
    }
    auto pos = std::upper_bound(pending.begin(), pending.end(), merged, canonical_before);
    pending.insert(pos, merged);
}

std::int64_t AllocatorState::oldest_wait(std::int64_t now) const {
    std::int64_t wait = 0;
    for (const auto& r : pending) wait = std::max(wait, now - r.arrival);
    return wait;
}

double selection_probability(double t_eff, double x, double nu) {
    const double p = std::pow(t_eff, x) * nu;
    return p < 1.0 ? p : 1.0;
}

std::vector<AllocationRequest> select_requesters(std::span<const AllocationRequest> pending,
                                                 double x, double nu, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<AllocationRequest> kept;
    for (const auto& request : pending) {
        const double draw = 1.0 - unit(rng); // (0,1]
        if (draw <= selection_probability(request.t_eff, x, nu)) kept.push_back(request);
    }
    return kept;
}

double marginal_gain(std::int64_t k, std::int64_t demand_units, double x) {
    const double kd = static_cast<double>(k);
    return (std::pow(kd, x) - std::pow(kd - 1.0, x)) *
           std::pow(1.0 / static_cast<double>(demand_units), x);
}

namespace {

struct ArrayEntry {
    double gain;
    std::int64_t demand;
    NodeId requester;
    std::int64_t k;
};

// Larger gain first; ties to smaller demand, then smaller NodeId, then
// earlier unit so every requester's kept entries form a prefix.
bool entry_before(const ArrayEntry& a, const ArrayEntry& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    if (a.demand != b.demand) return a.demand < b.demand;
    if (a.requester != b.requester) return a.requester < b.requester;
    return a.k < b.k;
}

} // namespace

AllocationGrant allocate_capacity(std::span<const AllocationRequest> selected,
                                  std::int64_t shared_units, double x) {
    AllocationGrant grant;
    std::int64_t total_demand = 0;
    for (const auto& r : selected) {
        if (r.q_r_units < 1) throw InvariantViolation("q_r_units must be >= 1");
        if (!grant.emplace(r.requester, 0).second)
            throw InvariantViolation("duplicate requester in allocation batch");
        total_demand += r.q_r_units;
    }
    if (total_demand <= shared_units) {
        for (const auto& r : selected) grant[r.requester] = r.q_r_units;
        return grant;
    }
    if (shared_units <= 0) return grant;

    // Columns are truncated at each requester's demand (grant <= demand) and
    // at the capacity (no requester can use more rows than that).
    std::vector<ArrayEntry> entries;
    for (const auto& r : selected) {
        const std::int64_t rows = std::min(r.q_r_units, shared_units);
        for (std::int64_t k = 1; k <= rows; ++k)
            entries.push_back({marginal_gain(k, r.q_r_units, x), r.q_r_units, r.requester, k});
    }
    const auto top = static_cast<std::ptrdiff_t>(shared_units);
    std::nth_element(entries.begin(), entries.begin() + top - 1, entries.end(), entry_before);
    for (std::ptrdiff_t i = 0; i < top; ++i) grant[entries[i].requester] += 1;
    return grant;
}

double allocation_objective(const AllocationGrant& grant,
                            std::span<const AllocationRequest> selected, double x) {
    double sum = 0.0;
    for (const auto& r : selected) {
        auto it = grant.find(r.requester);
        const double units = it == grant.end() ? 0.0 : static_cast<double>(it->second);
        sum += std::pow(units / static_cast<double>(r.q_r_units), x);
    }
    return sum;
}

double adjust_nu(const AllocatorState& state, double utilization, double fulfillment) {
    const NuControl& c = state.control;
    double nu = state.nu;
    if (fulfillment < c.f_ok) {
        nu *= c.g_down;
    } else if (utilization < c.u_low) {
        nu *= c.g_up;
    }
    return std::clamp(nu, c.nu_min, c.nu_max);
}

bool serving_trigger(std::span<const AllocationRequest> pending, double theta,
                     std::int64_t oldest_wait, std::int64_t tau) {
    if (pending.empty()) return false;
    if (oldest_wait >= tau) return true;
    double sum = 0.0;
    for (const auto& r : pending) {
        sum += r.t_eff;
        if (sum >= theta) return true;
    }
    return false;
}

} // namespace repalloc
