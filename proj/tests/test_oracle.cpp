#include <doctest.h>

#include <chrono>

#include "repalloc/oracle.hpp"

using namespace repalloc;

TEST_SUITE("oracle") {

TEST_CASE("exhaustive search on the worked example") {
    std::vector<AllocationRequest> reqs{{NodeId{0}, 2, 0, 1}, {NodeId{1}, 4, 0, 1}};
    CHECK(exhaustive_allocate(reqs, 4, 0.75) == AllocationGrant{{NodeId{0}, 2}, {NodeId{1}, 2}});
}

TEST_CASE("greedy passes a thousand instances") {
    const auto start = std::chrono::steady_clock::now();
    const auto r = oracle_check({}, 1000, 1);
    CHECK(r.trials == 1000);
    CHECK(r.passed());
    CHECK(r.max_gap <= 1e-9);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

TEST_CASE("no trials is an empty success") {
    const auto r = oracle_check({}, 0, 1);
    CHECK(r.trials == 0);
    CHECK(r.max_gap == 0.0);
    CHECK(r.passed());
}

TEST_CASE("a broken allocator is caught") {
    const auto r = oracle_check({}, 1000, 1, 0.75, largest_first_allocate);
    CHECK_FALSE(r.passed());
    CHECK(r.gap_failures > 0);
}

TEST_CASE("an allocator that wastes capacity is infeasible") {
    auto lazy = [](std::span<const AllocationRequest> s, std::int64_t u, double x) {
        return allocate_capacity(s, u > 0 ? u - 1 : 0, x);
    };
    const auto r = oracle_check({}, 200, 3, 0.75, lazy);
    CHECK(r.infeasible > 0);
}

}
