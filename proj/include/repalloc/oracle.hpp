#pragma once

// Brute-force cross-check of the greedy capacity split on small instances.

#include <cstdint>
#include <functional>
#include <span>

#include "repalloc/allocator.hpp"

namespace repalloc {

/// Enumerates every integer split of min(shared_units, total demand) with
/// 0 <= grant_j <= demand_j and returns one maximising the objective.
AllocationGrant exhaustive_allocate(std::span<const AllocationRequest> selected,
                                    std::int64_t shared_units, double x);

using AllocatorFn =
    std::function<AllocationGrant(std::span<const AllocationRequest>, std::int64_t, double)>;

struct OracleLimits {
    std::size_t max_requesters = 4;
    std::int64_t max_demand = 8;
    std::int64_t max_capacity = 10;
};

struct OracleReport {
    std::size_t trials = 0;
    double max_gap = 0.0;               // exhaustive objective minus allocator objective
    std::size_t gap_failures = 0;       // gap above tolerance
    std::size_t infeasible = 0;         // grant breaks a demand bound or leaves capacity idle
    double tolerance = 1e-9;
    bool passed() const { return gap_failures == 0 && infeasible == 0; }
};

OracleReport oracle_check(const OracleLimits& limits, std::size_t trials, std::uint64_t seed,
                          double x = 0.75, const AllocatorFn& allocator = allocate_capacity);

/// Deliberately suboptimal allocator: fills the largest demands first. Used to
/// show that the check detects a broken allocator.
AllocationGrant largest_first_allocate(std::span<const AllocationRequest> selected,
                                       std::int64_t shared_units, double x);

} // namespace repalloc
