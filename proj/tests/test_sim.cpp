#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "repalloc/sim.hpp"

using namespace repalloc;

namespace {

ScenarioConfig small(std::size_t n = 40, std::int64_t iterations = 60) {
    ScenarioConfig c;
    c.n_nodes = n;
    c.iterations = iterations;
    c.acquaintance = 10;
    return c;
}

bool same_rows(const MetricsSeries& a, const MetricsSeries& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& x = a.rows[i];
        const auto& y = b.rows[i];
        if (x.iteration != y.iteration || x.node != y.node || x.requested != y.requested ||
            x.received != y.received || x.served != y.served || x.shared != y.shared ||
            x.pending != y.pending || x.selected != y.selected ||
            x.utilization != y.utilization || x.nu != y.nu || x.queries != y.queries ||
            x.resolved != y.resolved || x.probes != y.probes)
            return false;
    }
    return a.reviews.size() == b.reviews.size();
}

} // namespace

TEST_SUITE("sim") {

TEST_CASE("configuration validation") {
    ScenarioConfig c;
    c.n_nodes = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = ScenarioConfig{};
    c.groups = {NodeGroup{}};
    c.groups[0].count = 10;
    try {
        c.validate();
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        REQUIRE(!e.violations().empty());
        CHECK(e.violations()[0].find("group counts") != std::string::npos);
    }

    c = ScenarioConfig{};
    c.acquaintance = 600;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("free riders are carved from the highest ids") {
    ScenarioConfig c;
    c.free_rider_pct = 10;
    CHECK(c.free_rider_count() == 20);
    const auto groups = c.resolved_groups();
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].count == 180);
    CHECK(groups[1].name == "free-rider");
    CHECK(groups[1].count == 20);
    Simulation sim(c);
    CHECK(sim.node(NodeId{179}).params.strategy.shares());
    CHECK_FALSE(sim.node(NodeId{180}).params.strategy.shares());
}

TEST_CASE("minimal network") {
    ScenarioConfig c;
    c.n_nodes = 2;
    c.iterations = 0;
    c.acquaintance = 0;
    Simulation sim(c);
    CHECK(sim.nodes().size() == 2);
    for (const auto& n : sim.nodes()) {
        CHECK(n.reputation.size() == 0);
        CHECK(n.interactions.peers().empty());
    }
    CHECK(run(c).rows.empty());
}

TEST_CASE("paper-scale network builds") {
    Simulation sim(ScenarioConfig{});
    CHECK(sim.nodes().size() == 200);
    CHECK(sim.universal_scale() == 100.0);
}

TEST_CASE("same seed builds the same network") {
    ScenarioConfig c = small();
    c.routing.mode = RoutingMode::interest;
    Simulation a(c), b(c);
    for (std::size_t i = 0; i < a.nodes().size(); ++i) {
        CHECK(a.nodes()[i].interests == b.nodes()[i].interests);
        CHECK(a.nodes()[i].holds == b.nodes()[i].holds);
    }
}

TEST_CASE("reputable requester is fully served") {
    ScenarioConfig c;
    c.n_nodes = 2;
    c.iterations = 1;
    c.acquaintance = 0;
    c.demand = {10, 10};
    c.routing.servers_per_request = 1;
    c.routing.candidate_pool = 1;
    c.t_newcomer = 1.0;
    const auto series = run(c);
    REQUIRE(series.rows.size() == 2);
    for (const auto& r : series.rows) {
        CHECK(r.requested == 10);
        CHECK(r.received == 10);
    }
}

TEST_CASE("granted units are conserved and capacity is respected") {
    ScenarioConfig c = small(60, 80);
    c.groups = {NodeGroup{"fixed", 30, 100, SharePolicy::fixed, 15, {}, {}},
                NodeGroup{"ctl", 30, 100, SharePolicy::controller, 25, {}, {}}};
    c.free_rider_pct = 10;
    const auto series = run(c);
    std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> per_iter;
    for (const auto& r : series.rows) {
        per_iter[r.iteration].first += r.served;
        per_iter[r.iteration].second += r.received;
        CHECK(r.served <= static_cast<std::int64_t>(std::floor(r.shared + 1e-9)));
        CHECK(r.shared >= 0.0);
    }
    for (const auto& [it, sums] : per_iter) CHECK(sums.first == sums.second);
    CHECK_FALSE(series.reviews.empty());
}

TEST_CASE("free riders lose service after acquaintance") {
    ScenarioConfig c;
    c.iterations = 150;
    c.free_rider_pct = 20;
    Simulation sim(c);
    double rider = 0, contributor = 0;
    long nr = 0, nc = 0;
    while (sim.iteration() < c.iterations) {
        const auto out = sim.step();
        for (const auto& r : out.rows) {
            if (r.iteration < 100) continue;
            if (out.group_names[r.group] == "free-rider") rider += r.received, ++nr;
            else contributor += r.received, ++nc;
        }
    }
    CHECK(rider / nr < 0.5 * contributor / nc);
    // Every opinion held about a free rider comes from refused requests.
    for (const auto& n : sim.nodes())
        for (const auto& [peer, e] : n.reputation.entries())
            if (!sim.node(peer).params.strategy.shares()) CHECK(e.t == 0.0);
}

TEST_CASE("acquaintance treats free riders like contributors") {
    double rider = 0, contributor = 0;
    long nr = 0, nc = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ScenarioConfig c;
        c.iterations = 50;
        c.acquaintance = 49;
        c.free_rider_pct = 30;
        c.seed = seed;
        const auto series = run(c);
        for (const auto& r : series.rows) {
            if (r.iteration >= c.acquaintance) continue;
            if (series.group_names[r.group] == "free-rider") rider += r.received, ++nr;
            else contributor += r.received, ++nc;
        }
    }
    const double a = rider / nr, b = contributor / nc;
    CHECK(std::abs(a - b) / b < 0.05);
}

TEST_CASE("runs are a pure function of the configuration") {
    ScenarioConfig c = small(50, 70);
    c.groups = {NodeGroup{"a", 25, 100, SharePolicy::controller, 20, {}, {}},
                NodeGroup{"b", 25, 100, SharePolicy::fixed, 20, Strategy::over_requester(2), {}}};
    CHECK(same_rows(run(c), run(c)));
    ScenarioConfig d = c;
    d.seed = 2;
    CHECK_FALSE(same_rows(run(c), run(d)));

    ScenarioConfig q = small(80, 40);
    q.routing.mode = RoutingMode::interest;
    CHECK(same_rows(run(q), run(q)));
}

TEST_CASE("zero iterations give an empty series") {
    ScenarioConfig c;
    c.iterations = 0;
    c.acquaintance = 0;
    const auto s = run(c);
    CHECK(s.rows.empty());
    CHECK(s.reviews.empty());
}

TEST_CASE("query reaches a ranked neighbor holding the file first") {
    ScenarioConfig c = small(60, 30);
    c.routing.mode = RoutingMode::interest;
    Simulation sim(c);
    for (int i = 0; i < 20; ++i) sim.step();
    bool tried = false;
    for (const auto& n : sim.nodes()) {
        if (n.neighbors.empty()) continue;
        const NodeId top = n.neighbors.front().node;
        for (FileId f = 0; f < sim.file_count(); ++f) {
            if (!sim.holds(top, f) || sim.holds(n.params.node, f)) continue;
            const auto out = sim.query_routing_trial(n.params.node, f, RoutingMode::interest);
            CHECK(out.resolved);
            CHECK(out.probes == 1);
            CHECK(*out.holder == top);
            tried = true;
            break;
        }
        if (tried) break;
    }
    CHECK(tried);
}

TEST_CASE("query for an unheld file spends the whole ttl") {
    ScenarioConfig c = small(60, 30);
    c.routing.mode = RoutingMode::baseline;
    c.routing.ttl = 7;
    Simulation sim(c);
    const FileId missing = static_cast<FileId>(sim.file_count());
    const auto out = sim.query_routing_trial(NodeId{0}, missing, RoutingMode::baseline);
    CHECK_FALSE(out.resolved);
    CHECK(out.probes == 7);
}

TEST_CASE("uniform probing matches the hypergeometric expectation") {
    ScenarioConfig c = small(200, 20);
    c.routing.mode = RoutingMode::baseline;
    c.routing.ttl = 1000;
    Simulation sim(c);
    const NodeId querier{0};
    FileId file = 0;
    std::size_t h = 0;
    for (FileId f = 0; f < sim.file_count(); ++f) {
        if (sim.holds(querier, f)) continue;
        h = sim.holders(f).size();
        if (h >= 3) {
            file = f;
            break;
        }
    }
    REQUIRE(h >= 3);
    const double peers = static_cast<double>(sim.nodes().size() - 1);
    const double expected = (peers + 1) / (static_cast<double>(h) + 1);
    double total = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto out = sim.query_routing_trial(querier, file, RoutingMode::baseline);
        REQUIRE(out.resolved);
        total += static_cast<double>(out.probes);
    }
    CHECK(std::abs(total / 10000 - expected) / expected < 0.05);
}

}
