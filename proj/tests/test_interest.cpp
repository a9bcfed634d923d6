#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "repalloc/interest.hpp"

using namespace repalloc;

namespace {

InterestConfig config(double alpha, std::size_t keep = 20) {
    InterestConfig c;
    c.alpha = alpha;
    c.neighbor_count = keep;
    return c;
}

std::vector<NodeId> ids(std::initializer_list<std::uint32_t> v) {
    std::vector<NodeId> out;
    for (auto i : v) out.push_back(NodeId{i});
    return out;
}

} // namespace

TEST_SUITE("interest") {

TEST_CASE("similarity examples") {
    CHECK(similarity(0, 0, 10) == 0.0);
    CHECK(similarity(20, 14, 10) == doctest::Approx(0.7));
    CHECK(similarity(9, 9, 100) == doctest::Approx(0.5));
    // below the base the ratio is damped by log_base(omega + 1)
    CHECK(similarity(3, 3, 10) == doctest::Approx(std::log10(4.0)));
    CHECK_THROWS_AS(similarity(3, 4, 10), InvariantViolation);
}

TEST_CASE("similarity is non-decreasing in answered") {
    for (double base : {2.0, 10.0, 100.0})
        for (std::uint64_t omega = 1; omega < 150; omega += 7)
            for (std::uint64_t a = 1; a <= omega; ++a)
                CHECK(similarity(omega, a - 1, base) <= similarity(omega, a, base));
}

TEST_CASE("combined score examples") {
    CHECK(combined_score(0.4, 0.9, 1.0) == doctest::Approx(0.4));
    CHECK(combined_score(0.4, 0.9, 0.0) == doctest::Approx(0.9));
    CHECK(combined_score(0.4, 0.8, 0.5) == doctest::Approx(0.6));
}

TEST_CASE("combined score is monotone in both inputs") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng), chi = u(rng), t = u(rng), d = u(rng);
        CHECK(combined_score(chi, t, a) <= combined_score(chi + d, t, a) + 1e-15);
        CHECK(combined_score(chi, t, a) <= combined_score(chi, t + d, a) + 1e-15);
    }
}

TEST_CASE("ranking examples") {
    InteractionStats stats(NodeId{0});
    ReputationTable reps(NodeId{0});
    auto one = ids({4});
    auto r = rank_servers(stats, reps, config(0.0), one);
    REQUIRE(r.size() == 1);
    CHECK(r[0].node == NodeId{4});

    reps.record_transaction({0.3}, NodeId{1}, 0, 0.3);
    reps.record_transaction({0.6}, NodeId{2}, 0, 0.3);
    auto two = ids({1, 2});
    r = rank_servers(stats, reps, config(0.0), two);
    CHECK(r[0].node == NodeId{2});
    CHECK(r[0].score == doctest::Approx(0.6));

    auto tie = ids({7, 3});
    r = rank_servers(stats, reps, config(0.0), tie);
    CHECK(r[0].node == NodeId{3});
    CHECK(r[1].node == NodeId{7});
}

TEST_CASE("pure reputation and pure similarity orderings") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> omega(1, 30);
    InteractionStats stats(NodeId{0});
    ReputationTable reps(NodeId{0});
    std::vector<NodeId> cands;
    for (std::uint32_t p = 1; p <= 40; ++p) {
        cands.push_back(NodeId{p});
        reps.record_transaction({u(rng)}, NodeId{p}, 0, 0.3);
        const int n = omega(rng);
        for (int k = 0; k < n; ++k) stats.record(NodeId{p}, u(rng) < 0.5);
    }
    const InterestConfig base = config(0.0, 40);
    auto by_rep = rank_servers(stats, reps, config(0.0, 40), cands);
    for (std::size_t i = 1; i < by_rep.size(); ++i)
        CHECK(*reps.score(by_rep[i - 1].node) >= *reps.score(by_rep[i].node));
    auto by_sim = rank_servers(stats, reps, config(1.0, 40), cands);
    auto chi = [&](NodeId p) {
        const auto h = stats.get(p);
        return similarity(h.omega, h.answered, base.base);
    };
    for (std::size_t i = 1; i < by_sim.size(); ++i)
        CHECK(chi(by_sim[i - 1].node) >= chi(by_sim[i].node));
}

TEST_CASE("top choice survives positive rescaling") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    InteractionStats stats(NodeId{0});
    ReputationTable reps(NodeId{0}), scaled(NodeId{0});
    std::vector<NodeId> cands;
    for (std::uint32_t p = 1; p <= 25; ++p) {
        cands.push_back(NodeId{p});
        const double t = u(rng);
        reps.record_transaction({t}, NodeId{p}, 0, 0.3);
        scaled.record_transaction({t * 0.37}, NodeId{p}, 0, 0.3);
    }
    CHECK(rank_servers(stats, reps, config(0.0, 1), cands)[0].node ==
          rank_servers(stats, scaled, config(0.0, 1), cands)[0].node);
}

TEST_CASE("ranking truncates to the neighbor count") {
    InteractionStats stats(NodeId{0});
    ReputationTable reps(NodeId{0});
    auto cands = ids({1, 2, 3, 4, 5});
    CHECK(rank_servers(stats, reps, config(0.5, 3), cands).size() == 3);
}

TEST_CASE("interactions count both outcomes") {
    InteractionStats stats(NodeId{0});
    stats.record(NodeId{3}, true);
    stats.record(NodeId{3}, false);
    CHECK(stats.get(NodeId{3}).omega == 2);
    CHECK(stats.get(NodeId{3}).answered == 1);
    CHECK(stats.get(NodeId{9}).omega == 0);
}

TEST_CASE("base adaptation") {
    InterestConfig c;
    CHECK(adapt_base(c, 0.3) == doctest::Approx(20.0));
    CHECK(adapt_base(c, 0.6) == doctest::Approx(10.0));
    c.base = 20.0;
    CHECK(adapt_base(c, 0.95) == doctest::Approx(10.0));
    c.base = 3.0;
    CHECK(adapt_base(c, 0.95) == doctest::Approx(2.0));
}

TEST_CASE("alpha adaptation") {
    InterestConfig c;
    CHECK(adapt_alpha(c, 0, 0.0) == doctest::Approx(0.8));
    for (int period = 0; period < 200; ++period) c.alpha = adapt_alpha(c, 100 + period, 0.1);
    CHECK(std::abs(c.alpha - 0.2) < 0.01);
    CHECK(adapt_alpha(c, 400, 0.9) == doctest::Approx(0.8));
}

TEST_CASE("churn of the ranked set") {
    std::vector<RankedServer> a{{NodeId{1}, 0.5}, {NodeId{2}, 0.4}};
    std::vector<RankedServer> b{{NodeId{2}, 0.5}, {NodeId{3}, 0.4}};
    CHECK(ranked_set_churn(a, b) == doctest::Approx(0.5));
    CHECK(ranked_set_churn({}, b) == doctest::Approx(1.0));
    CHECK(ranked_set_churn(a, {}) == 0.0);
}

}
