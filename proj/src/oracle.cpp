#include "repalloc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace repalloc {

AllocationGrant exhaustive_allocate(std::span<const AllocationRequest> selected,
                                    std::int64_t shared_units, double x) {
    const std::size_t n = selected.size();
    std::int64_t total = 0;
    for (const auto& r : selected) total += r.q_r_units;
    const std::int64_t target = std::min(std::max<std::int64_t>(shared_units, 0), total);

    std::vector<std::int64_t> cur(n, 0), best(n, 0);
    double best_obj = -1.0;
    auto objective = [&] {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            s += std::pow(static_cast<double>(cur[j]) /
                              static_cast<double>(selected[j].q_r_units), x);
        return s;
    };
    auto rec = [&](auto&& self, std::size_t j, std::int64_t left) -> void {
        if (j + 1 == n) {
            if (left > selected[j].q_r_units) return;
            cur[j] = left;
            const double obj = objective();
            if (obj > best_obj) best_obj = obj, best = cur;
            return;
        }
        for (std::int64_t g = 0; g <= std::min(left, selected[j].q_r_units); ++g) {
            cur[j] = g;
            self(self, j + 1, left - g);
        }
    };
    if (n > 0) rec(rec, 0, target);

    AllocationGrant grant;
    for (std::size_t j = 0; j < n; ++j) grant[selected[j].requester] = best[j];
    return grant;
}

OracleReport oracle_check(const OracleLimits& limits, std::size_t trials, std::uint64_t seed,
                          double x, const AllocatorFn& allocator) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> count(1, std::max<std::size_t>(1, limits.max_requesters));
    std::uniform_int_distribution<std::int64_t> demand(1, std::max<std::int64_t>(1, limits.max_demand));
    std::uniform_int_distribution<std::int64_t> capacity(0, std::max<std::int64_t>(0, limits.max_capacity));

    OracleReport report;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<AllocationRequest> reqs(count(rng));
        std::int64_t total = 0;
        for (std::size_t j = 0; j < reqs.size(); ++j) {
            reqs[j].requester = NodeId{static_cast<std::uint32_t>(j)};
            reqs[j].q_r_units = demand(rng);
            total += reqs[j].q_r_units;
        }
        const std::int64_t units = capacity(rng);

        const AllocationGrant got = allocator(reqs, units, x);
        std::int64_t granted = 0;
        bool feasible = true;
        for (const auto& r : reqs) {
            auto it = got.find(r.requester);
            const std::int64_t g = it == got.end() ? 0 : it->second;
            if (g < 0 || g > r.q_r_units) feasible = false;
            granted += g;
        }
        if (granted != std::min(units, total)) feasible = false;
        if (!feasible) ++report.infeasible;

        const double gap = allocation_objective(exhaustive_allocate(reqs, units, x), reqs, x) -
                           allocation_objective(got, reqs, x);
        report.max_gap = std::max(report.max_gap, gap);
        if (gap > report.tolerance) ++report.gap_failures;
        ++report.trials;
    }
    return report;
}

AllocationGrant largest_first_allocate(std::span<const AllocationRequest> selected,
                                       std::int64_t shared_units, double) {
    std::vector<AllocationRequest> order(selected.begin(), selected.end());
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.q_r_units > b.q_r_units;
    });
    AllocationGrant grant;
    std::int64_t left = std::max<std::int64_t>(shared_units, 0);
    for (const auto& r : order) {
        const std::int64_t g = std::min(left, r.q_r_units);
        grant[r.requester] = g;
        left -= g;
    }
    return grant;
}

} // namespace repalloc
