#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fcofdm/linksim.hpp"
#include "fcofdm/optimizer.hpp"

namespace fcofdm {

using Json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loads a JSON configuration. An "include" entry (string or array of
// strings, resolved relative to the including file) is loaded first; the
// including document's own keys are then deep-merged on top.
Json load_config(const std::string& path);
Json merge_configs(Json base, const Json& overlay);

// Section parsers; every field is validated with a path-qualified message
// before any computation runs.
FcConfig parse_fc(const Json& engine, const Json& subband);
OfdmNumerology parse_numerology(const Json& subband);
WeightMask parse_mask(const Json& subband);
SubbandSignal parse_subband(const Json& engine, const Json& subband);
LinkScenario parse_scenario(const Json& root);

enum class FilterMode { two_sided, tx_only, rx_only };
FilterMode parse_filter_mode(const std::string& name);

// Analysis/design model for one subband of the scenario.
TmuxModel build_model(const Json& root, std::size_t subband_index, FilterMode mode);
DesignProblem parse_design(const Json& root);

// Stable identifier derived from the configuration content and seed.
std::string run_id(const Json& root, std::uint64_t seed);

extern const char* const kEngineVersion;

}  // namespace fcofdm
