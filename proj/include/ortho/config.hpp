#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ortho/bench.hpp"

namespace ortho {

/// Flat key=value configuration: one pair per line, '#' starts a comment,
/// blank lines ignored. Typed access tracks which keys were consumed so
/// unknown keys can be rejected by name.
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);

    /// Insert or override one key (command-line overrides).
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_real(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    /// Keys present but never consumed by any getter.
    std::vector<std::string> unconsumed_keys() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

/// Reads the documented benchmark keys out of a RunConfig.
SyntheticConfig synthetic_config_from(const RunConfig& cfg);

/// The documented decouple config keys, for --help output.
const std::vector<std::pair<std::string, std::string>>& decouple_config_keys();

ManifoldOptimizer parse_optimizer(const std::string& name);
TrainingArm parse_arm(const std::string& name);

}  // namespace ortho
