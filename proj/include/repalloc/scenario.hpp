#pragma once

// YAML scenario files. Every key is optional; omitted keys take the defaults
// declared on ScenarioConfig and its sub-structures.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "repalloc/sim.hpp"

namespace repalloc {

class ScenarioParseError : public std::runtime_error {
public:
    ScenarioParseError(std::string field, int line, const std::string& detail);
    const std::string& field() const { return field_; }
    int line() const { return line_; }

private:
    std::string field_;
    int line_;
};

ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig parse_scenario(const std::filesystem::path& path);

/// Fully resolved configuration as YAML. Parsing the output yields the same
/// configuration.
std::string emit_scenario(const ScenarioConfig& config);

/// Sets a dotted key (e.g. "routing.candidate_pool") to a scalar value and
/// re-validates. Group fields are not addressable.
ScenarioConfig with_override(const ScenarioConfig& config, const std::string& key,
                             const std::string& value);

} // namespace repalloc
