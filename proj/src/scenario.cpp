#include "repalloc/scenario.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace repalloc {

ScenarioParseError::ScenarioParseError(std::string field, int line, const std::string& detail)
    : std::runtime_error(line > 0 ? fmt::format("line {}: field '{}': {}", line, field, detail)
                                  : fmt::format("field '{}': {}", field, detail)),
      field_(std::move(field)),
      line_(line) {}

namespace {

int line_of(const YAML::Node& n) {
    const auto mark = n.Mark();
    return mark.line >= 0 ? mark.line + 1 : 0;
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) throw ScenarioParseError(field, line_of(n), "expected a scalar");
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ScenarioParseError(field, line_of(n), "malformed value '" + n.Scalar() + "'");
    }
}

// Unsigned counts are read as signed first so that "-3" is reported instead
// of wrapping.
std::size_t count_value(const YAML::Node& n, const std::string& field) {
    const auto v = scalar<long long>(n, field);
    if (v < 0) throw ScenarioParseError(field, line_of(n), "must be >= 0");
    return static_cast<std::size_t>(v);
}

template <typename Fn>
auto wrapped(const YAML::Node& n, const std::string& field, Fn fn) {
    try {
        return fn(scalar<std::string>(n, field));
    } catch (const InvariantViolation& e) {
        throw ScenarioParseError(field, line_of(n), e.what());
    }
}

using Handler = std::function<void(const YAML::Node&, const std::string&)>;

void walk(const YAML::Node& map, const std::string& prefix,
          const std::map<std::string, Handler>& handlers) {
    if (!map || map.IsNull()) return;
    if (!map.IsMap())
        throw ScenarioParseError(prefix.empty() ? "<root>" : prefix, line_of(map),
                                 "expected a mapping");
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        const std::string field = prefix.empty() ? key : prefix + "." + key;
        auto it = handlers.find(key);
        if (it == handlers.end())
            throw ScenarioParseError(field, line_of(kv.first), "unknown key");
        it->second(kv.second, field);
    }
}

template <typename T>
Handler number(T& target) {
    return [&target](const YAML::Node& n, const std::string& f) {
        if constexpr (std::is_same_v<T, std::size_t>)
            target = count_value(n, f);
        else
            target = scalar<T>(n, f);
    };
}

NodeGroup parse_group(const YAML::Node& n, const std::string& prefix) {
    NodeGroup g;
    std::optional<YAML::Node> shared;
    walk(n, prefix,
         {{"name", [&](const YAML::Node& v, const std::string& f) { g.name = scalar<std::string>(v, f); }},
          {"count", number(g.count)},
          {"download_capacity", number(g.download_capacity)},
          {"policy",
           [&](const YAML::Node& v, const std::string& f) {
               g.policy = wrapped(v, f, share_policy_from_string);
           }},
          {"shared_capacity", [&](const YAML::Node& v, const std::string&) { shared = v; }},
          {"strategy",
           [&](const YAML::Node& v, const std::string& f) {
               g.strategy.kind = wrapped(v, f, strategy_kind_from_string);
           }},
          {"multiplier", number(g.strategy.multiplier)},
          {"eta", [&](const YAML::Node& v, const std::string& f) { g.eta = scalar<double>(v, f); }}});
    if (shared) {
        const std::string f = prefix + ".shared_capacity";
        if (shared->IsScalar() && shared->Scalar() == "auto")
            g.shared_capacity = initial_capacity(std::nullopt, g.download_capacity);
        else
            g.shared_capacity = scalar<double>(*shared, f);
    }
    if (g.strategy.kind == StrategyKind::free_rider) g.strategy.multiplier = 1.0;
    return g;
}

ScenarioConfig parse_node(const YAML::Node& root) {
    ScenarioConfig c;
    auto& nu = c.allocator.control;
    auto& it = c.interest.tuning;
    walk(root, "",
         {{"n_nodes", number(c.n_nodes)},
          {"iterations", number(c.iterations)},
          {"acquaintance", number(c.acquaintance)},
          {"seed", number(c.seed)},
          {"free_rider_pct", number(c.free_rider_pct)},
          {"allocation_unit", number(c.allocation_unit)},
          {"t_newcomer", number(c.t_newcomer)},
          {"adapt_window", number(c.adapt_window)},
          {"dump_interval", number(c.dump_interval)},
          {"groups",
           [&](const YAML::Node& v, const std::string& f) {
               if (!v.IsSequence()) throw ScenarioParseError(f, line_of(v), "expected a list");
               for (std::size_t i = 0; i < v.size(); ++i)
                   c.groups.push_back(parse_group(v[i], fmt::format("{}[{}]", f, i)));
           }},
          {"demand",
           [&](const YAML::Node& v, const std::string& f) {
               walk(v, f, {{"min", number(c.demand.min)}, {"max", number(c.demand.max)}});
           }},
          {"routing",
           [&](const YAML::Node& v, const std::string& f) {
               walk(v, f,
                    {{"mode",
                      [&](const YAML::Node& m, const std::string& mf) {
                          c.routing.mode = wrapped(m, mf, routing_mode_from_string);
                      }},
                     {"candidate_pool", number(c.routing.candidate_pool)},
                     {"servers_per_request", number(c.routing.servers_per_request)},
                     {"ttl", number(c.routing.ttl)}});
           }},
          {"content",
           [&](const YAML::Node& v, const std::string& f) {
               walk(v, f,
                    {{"categories", number(c.content.categories)},
                     {"interests_per_node", number(c.content.interests_per_node)},
                     {"files_per_category", number(c.content.files_per_category)},
                     {"holdings_per_interest", number(c.content.holdings_per_interest)},
                     {"queries_per_iteration", number(c.content.queries_per_iteration)}});
           }},
          {"params",
           [&](const YAML::Node& v, const std::string& f) {
               walk(v, f,
                    {{"x", number(c.global.x)},
                     {"Q_rd", number(c.global.q_rd_universal)},
                     {"eta_default", number(c.global.eta_default)},
                     {"rep_smoothing", number(c.global.rep_smoothing)}});
           }},
          {"allocator",
           [&](const YAML::Node& v, const std::string& f) {
               walk(v, f,
                    {{"nu", number(c.allocator.nu)},
                     {"theta", number(c.allocator.theta)},
                     {"tau", number(c.allocator.tau)},
                     {"window", number(nu.window)},
                     {"u_low", number(nu.u_low)},
                     {"f_ok", number(nu.f_ok)},
                     {"g_up", number(nu.g_up)},
                     {"g_down", number(nu.g_down)},
                     {"nu_min", number(nu.nu_min)},
                     {"nu_max", number(nu.nu_max)}});
           }},
          {"capacity",
           [&](const YAML::Node& v, const std::string& f) {
               walk(v, f,
                    {{"delta_fraction", number(c.capacity.delta_fraction)},
                     {"period", number(c.capacity.period)},
                     {"epsilon_scale", number(c.capacity.epsilon.scale)},
                     {"epsilon_min", number(c.capacity.epsilon.minimum)}});
           }},
          {"interest",
           [&](const YAML::Node& v, const std::string& f) {
               walk(v, f,
                    {{"base", number(c.interest.base)},
                     {"alpha", number(c.interest.alpha)},
                     {"neighbor_count", number(c.interest.neighbor_count)},
                     {"base_min", number(it.base_min)},
                     {"base_growth", number(it.base_growth)},
                     {"r_ok", number(it.r_ok)},
                     {"r_high", number(it.r_high)},
                     {"alpha_high", number(it.alpha_high)},
                     {"alpha_low", number(it.alpha_low)},
                     {"alpha_decay", number(it.alpha_decay)},
                     {"warmup", number(it.warmup)},
                     {"churn_threshold", number(it.churn_threshold)}});
           }}});
    c.validate();
    return c;
}

} // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioParseError("<document>", e.mark.line + 1, e.msg);
    }
    return parse_node(root);
}

ScenarioConfig parse_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioParseError("<file>", 0, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::string emit_scenario(const ScenarioConfig& c) {
    std::string out;
    auto line = [&out](std::string_view indent, std::string_view key, const auto& value) {
        out += fmt::format("{}{}: {}\n", indent, key, value);
    };
    line("", "n_nodes", c.n_nodes);
    line("", "iterations", c.iterations);
    line("", "acquaintance", c.acquaintance);
    line("", "seed", c.seed);
    line("", "free_rider_pct", c.free_rider_pct);
    line("", "allocation_unit", c.allocation_unit);
    line("", "t_newcomer", c.t_newcomer);
    line("", "adapt_window", c.adapt_window);
    line("", "dump_interval", c.dump_interval);

    std::vector<NodeGroup> groups = c.groups;
    if (groups.empty()) {
        groups.emplace_back();
        groups.back().count = c.n_nodes;
    }
    out += "groups:\n";
    for (const auto& g : groups) {
        line("  - ", "name", g.name);
        line("    ", "count", g.count);
        line("    ", "download_capacity", g.download_capacity);
        line("    ", "policy", to_string(g.policy));
        line("    ", "shared_capacity", g.shared_capacity);
        line("    ", "strategy", to_string(g.strategy.kind));
        line("    ", "multiplier", g.strategy.multiplier);
        if (g.eta) line("    ", "eta", *g.eta);
    }
    out += "demand:\n";
    line("  ", "min", c.demand.min);
    line("  ", "max", c.demand.max);
    out += "routing:\n";
    line("  ", "mode", to_string(c.routing.mode));
    line("  ", "candidate_pool", c.routing.candidate_pool);
    line("  ", "servers_per_request", c.routing.servers_per_request);
    line("  ", "ttl", c.routing.ttl);
    out += "content:\n";
    line("  ", "categories", c.content.categories);
    line("  ", "interests_per_node", c.content.interests_per_node);
    line("  ", "files_per_category", c.content.files_per_category);
    line("  ", "holdings_per_interest", c.content.holdings_per_interest);
    line("  ", "queries_per_iteration", c.content.queries_per_iteration);
    out += "params:\n";
    line("  ", "x", c.global.x);
    line("  ", "Q_rd", c.global.q_rd_universal);
    line("  ", "eta_default", c.global.eta_default);
    line("  ", "rep_smoothing", c.global.rep_smoothing);
    const auto& nu = c.allocator.control;
    out += "allocator:\n";
    line("  ", "nu", c.allocator.nu);
    line("  ", "theta", c.allocator.theta);
    line("  ", "tau", c.allocator.tau);
    line("  ", "window", nu.window);
    line("  ", "u_low", nu.u_low);
    line("  ", "f_ok", nu.f_ok);
    line("  ", "g_up", nu.g_up);
    line("  ", "g_down", nu.g_down);
    line("  ", "nu_min", nu.nu_min);
    line("  ", "nu_max", nu.nu_max);
    out += "capacity:\n";
    line("  ", "delta_fraction", c.capacity.delta_fraction);
    line("  ", "period", c.capacity.period);
    line("  ", "epsilon_scale", c.capacity.epsilon.scale);
    line("  ", "epsilon_min", c.capacity.epsilon.minimum);
    const auto& it = c.interest.tuning;
    out += "interest:\n";
    line("  ", "base", c.interest.base);
    line("  ", "alpha", c.interest.alpha);
    line("  ", "neighbor_count", c.interest.neighbor_count);
    line("  ", "base_min", it.base_min);
    line("  ", "base_growth", it.base_growth);
    line("  ", "r_ok", it.r_ok);
    line("  ", "r_high", it.r_high);
    line("  ", "alpha_high", it.alpha_high);
    line("  ", "alpha_low", it.alpha_low);
    line("  ", "alpha_decay", it.alpha_decay);
    line("  ", "warmup", it.warmup);
    line("  ", "churn_threshold", it.churn_threshold);
    return out;
}

ScenarioConfig with_override(const ScenarioConfig& config, const std::string& key,
                             const std::string& value) {
    YAML::Node root = YAML::Load(emit_scenario(config));
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    if (parts.empty() || parts.size() > 2 || parts.front() == "groups")
        throw ScenarioParseError(key, 0, "not an overridable key");
    const YAML::Node parent = root[parts[0]];
    const bool found = parts.size() == 1
                           ? parent.IsDefined() && parent.IsScalar()
                           : parent.IsMap() && parent[parts[1]].IsDefined() &&
                                 parent[parts[1]].IsScalar();
    if (!found) throw ScenarioParseError(key, 0, "unknown key");
    if (parts.size() == 1)
        root[parts[0]] = value;
    else
        root[parts[0]][parts[1]] = value;
    // A changed node count invalidates the echoed group; fall back to the
    // implicit single group.
    if (key == "n_nodes" && config.groups.empty()) root.remove("groups");
    YAML::Emitter em;
    em << root;
    return parse_scenario_text(em.c_str());
}

} // namespace repalloc
