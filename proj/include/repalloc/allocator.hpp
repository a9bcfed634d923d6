#pragma once

// A serving node's round: probabilistic requester selection weighted by
// effective reputation, adaptive selection multiplier, greedy division of the
// shared capacity and the threshold-or-timeout batch trigger.

#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "repalloc/types.hpp"

namespace repalloc {

using Rng = std::mt19937_64;

struct AllocationRequest {
    NodeId requester;
    std::int64_t q_r_units = 1;
    std::int64_t arrival = 0;
    double t_eff = 0.0;
};

/// Canonical pending order: effective reputation descending, NodeId ascending.
bool canonical_before(const AllocationRequest& a, const AllocationRequest& b);
void sort_canonical(std::vector<AllocationRequest>& requests);

struct NuControl {
    int window = 10;
    double u_low = 0.9;
    double f_ok = 0.9;
    double g_up = 1.1;
    double g_down = 0.9;
    double nu_min = 0.1;
    double nu_max = 10.0;
};

struct AllocatorState {
    double nu = 1.0;
    double delta_units = 1.0;        // rate carried by one allocation unit
    std::int64_t shared_units = 0;   // U_su
    std::vector<AllocationRequest> pending;
    double theta = 1.0;
    std::int64_t tau = 3;
    double util_window = 0.0;
    double fulfil_window = 1.0;
    NuControl control;

    /// Inserts in canonical order. A second request from a requester that is
    /// already pending is merged into the first: demands add, the earlier
    /// arrival is kept, the effective reputation is replaced and the sum is
    /// capped at `max_units`.
    void enqueue(const AllocationRequest& request,
                 std::int64_t max_units = std::numeric_limits<std::int64_t>::max());
    std::int64_t oldest_wait(std::int64_t now) const;
};

using AllocationGrant = std::map<NodeId, std::int64_t>;

/// min(1, t_eff^x * nu)
double selection_probability(double t_eff, double x, double nu);

/// Keeps each request independently with its selection probability. One
/// uniform draw in (0,1] per request, in the order given (callers pass the
/// canonical pending order); a request is kept iff draw <= probability.
std::vector<AllocationRequest> select_requesters(std::span<const AllocationRequest> pending,
                                                 double x, double nu, Rng& rng);

/// Objective gain of a requester's k-th unit when it asked for `demand_units`:
/// (k^x - (k-1)^x) * (1/demand)^x.
double marginal_gain(std::int64_t k, std::int64_t demand_units, double x);

/// Splits `shared_units` among the selected requesters. Under-subscribed
/// rounds grant every demand in full; otherwise the grant maximises
/// sum_j (grant_j / demand_j)^x by keeping the largest entries of the marginal
/// gain array. Requesters must be distinct.
AllocationGrant allocate_capacity(std::span<const AllocationRequest> selected,
                                  std::int64_t shared_units, double x);

double allocation_objective(const AllocationGrant& grant,
                            std::span<const AllocationRequest> selected, double x);

/// Multiplicative controller: low utilisation with fulfilled demand raises
/// nu, unfulfilled demand lowers it. Result clamped to [nu_min, nu_max].
double adjust_nu(const AllocatorState& state, double utilization, double fulfillment);

/// True when the running sum of effective reputation over `pending` (in the
/// given order) reaches `theta`, or the oldest request has waited `tau`.
bool serving_trigger(std::span<const AllocationRequest> pending, double theta,
                     std::int64_t oldest_wait, std::int64_t tau);

} // namespace repalloc
