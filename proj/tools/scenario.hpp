#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace zwanzig::cli {

using json = nlohmann::ordered_json;

// Malformed or physically invalid configuration (exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Reads a config file (JSON, comments allowed). Parse errors carry the line.
json read_config(const std::string& path);
json parse_config_text(const std::string& text);

// Checks keys and types, fills defaults and returns the canonical form.
// normalize(normalize(x)) == normalize(x).
json normalize(const json& config);

// Hard physics checks of a canonical config without computing anything.
// Throws ConfigError on the first violation.
void check_physics(const json& canonical);

// Full diagnostics for `validate`: hard violations and soft warnings.
struct Diagnostics {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};
Diagnostics diagnose(const json& config);

// Dotted path such as "model.C2" to the leaf of a canonical config; throws
// ConfigError unless it names an existing non-object leaf.
json::json_pointer leaf_pointer(const json& canonical, const std::string& dotted);

// Scenario configs after applying the sweep block (one per value, or the
// config itself when there is no sweep), each canonical and checked.
std::vector<json> expand_sweep(const json& canonical);

struct Artifact {
    std::string name;      // relative file name
    std::string content;
};

struct Evaluation {
    json metrics;
    std::vector<Artifact> files;
};

// Runs the methods and analyses of one canonical, sweep-free config.
Evaluation evaluate(const json& canonical, int threads, bool series = true);

// Scalar leaves of a metrics tree keyed by dotted path, in document order.
std::vector<std::pair<std::string, json>> scalar_metrics(const json& metrics);

std::uint64_t fnv1a(const std::string& text);

} // namespace zwanzig::cli
