// Scenario configuration ingestion (JSON with comments, strict keys, SI
// parameter resolution into the per-unit ScenarioConfig), run manifests with
// content digests, and the structured metrics summary.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gfm/harness.hpp"

namespace gfm {

// Schema/validation problem; the message names the offending field.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// File missing or unreadable.
class FileError : public std::runtime_error {
  public:
    explicit FileError(const std::string& what) : std::runtime_error(what) {}
};

struct LoadedScenario {
    nlohmann::json resolved;  // every default expanded; reparsing it is the identity
    ScenarioConfig cfg;       // per-unit form consumed by run_scenario
};

// Parse scenario JSON text (comments allowed). Unknown keys, wrong types and
// invariant violations raise ConfigError naming the field.
LoadedScenario parse_scenario(const std::string& text, const std::string& origin);

// Load either a scenario config or a run manifest (the embedded resolved
// config is used so a manifest re-runs its exact scenario).
LoadedScenario load_scenario_file(const std::string& path);

// Override the output decimation (CLI flag), keeping the resolved form in sync.
void apply_decimate(LoadedScenario& ls, int decimate);

std::string read_text_file(const std::string& path);    // throws FileError
void write_text_file(const std::string& path, const std::string& text);

uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kMetricsSchemaVersion = 1;

// metrics.json payload for one run; the schema version heads the document.
nlohmann::ordered_json metrics_to_json(const ScenarioMetrics& m, const TimeSeries& ts,
                                       const ScenarioConfig& cfg);

// Run manifest: resolved config plus emitted files with FNV-1a digests.
nlohmann::ordered_json make_manifest(
    const LoadedScenario& ls, const std::string& config_path,
    const std::vector<std::pair<std::string, std::string>>& outputs, long wall_ms);

}  // namespace gfm
