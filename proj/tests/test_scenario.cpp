#include <doctest.h>

#include <string>

#include "repalloc/scenario.hpp"

using namespace repalloc;

namespace {

std::string parse_error(const std::string& text) {
    try {
        parse_scenario_text(text);
    } catch (const ScenarioParseError& e) {
        return e.field();
    }
    return "";
}

} // namespace

TEST_SUITE("scenario") {

TEST_CASE("empty document gives the defaults") {
    const auto c = parse_scenario_text("");
    CHECK(emit_scenario(c) == emit_scenario(ScenarioConfig{}));
    CHECK(c.n_nodes == 200);
    CHECK(c.iterations == 500);
    CHECK(c.acquaintance == 50);
}

TEST_CASE("free rider percentage") {
    const auto c = parse_scenario_text("n_nodes: 200\nfree_rider_pct: 10\n");
    CHECK(c.free_rider_count() == 20);
    CHECK(c.resolved_groups().back().count == 20);
}

TEST_CASE("malformed numerics name the field") {
    CHECK(parse_error("n_nodes: lots\n") == "n_nodes");
    CHECK(parse_error("demand:\n  min: 1\n  max: x\n") == "demand.max");
    CHECK(parse_error("groups:\n  - count: -4\n") == "groups[0].count");
    try {
        parse_scenario_text("seed: 1\nallocator:\n  theta: high\n");
        FAIL("expected a parse error");
    } catch (const ScenarioParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("allocator.theta") != std::string::npos);
    }
}

TEST_CASE("unknown keys and bad names are rejected") {
    CHECK(parse_error("n_node: 20\n") == "n_node");
    CHECK(parse_error("routing:\n  mode: flood\n") == "routing.mode");
    CHECK(parse_error("groups:\n  - strategy: sneaky\n") == "groups[0].strategy");
    CHECK(parse_error("n_nodes: [1, 2\n") == "<document>");
}

TEST_CASE("invalid combinations fail validation") {
    CHECK_THROWS_AS(parse_scenario_text("n_nodes: 50\ngroups:\n  - count: 10\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_text("iterations: 10\nacquaintance: 10\n"), ConfigError);
}

TEST_CASE("groups parse with auto share") {
    const auto c = parse_scenario_text(R"(
n_nodes: 10
groups:
  - name: slow
    count: 4
    download_capacity: 60
    shared_capacity: auto
    policy: controller
  - name: greedy
    count: 6
    strategy: over-requester
    multiplier: 3
    eta: 0.2
demand: {min: 5, max: 10}
)");
    REQUIRE(c.groups.size() == 2);
    CHECK(c.groups[0].shared_capacity == 30.0);
    CHECK(c.groups[0].policy == SharePolicy::controller);
    CHECK(c.groups[1].strategy.kind == StrategyKind::over_requester);
    CHECK(c.groups[1].strategy.multiplier == 3.0);
    CHECK(*c.groups[1].eta == 0.2);
}

TEST_CASE("echo parses back to the same configuration") {
    const auto c = parse_scenario_text(R"(
n_nodes: 30
iterations: 90
seed: 7
free_rider_pct: 20
routing: {mode: interest, ttl: 40}
params: {x: 0.6, rep_smoothing: 0.15}
allocator: {theta: 0.7, g_up: 1.2}
capacity: {delta_fraction: 0.1}
interest: {alpha: 0.4, warmup: 20}
groups:
  - {name: a, count: 10, shared_capacity: 12.5}
  - {name: b, count: 20, policy: controller}
demand: {min: 3, max: 9}
)");
    const std::string echo = emit_scenario(c);
    CHECK(emit_scenario(parse_scenario_text(echo)) == echo);
}

TEST_CASE("dotted overrides") {
    const ScenarioConfig base;
    CHECK(with_override(base, "routing.candidate_pool", "6").routing.candidate_pool == 6);
    CHECK(with_override(base, "free_rider_pct", "30").free_rider_count() == 60);
    CHECK(with_override(base, "n_nodes", "50").resolved_groups().front().count == 50);
    CHECK_THROWS_AS(with_override(base, "routing.nope", "1"), ScenarioParseError);
    CHECK_THROWS_AS(with_override(base, "groups", "1"), ScenarioParseError);
    CHECK_THROWS_AS(with_override(base, "iterations", "ten"), ScenarioParseError);
}

}
