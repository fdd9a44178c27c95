#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "epnr/experiment.hpp"
#include "epnr/hazard.hpp"
#include "epnr/mdp.hpp"
#include "epnr/network.hpp"

namespace epnr {

/// Which network to simulate: a named preset, generator parameters, or a
/// network JSON document on disk.
struct NetworkSpec {
    std::string preset = "desk";  // desk | gilroy | custom
    int cells = 9;
    int transmission_len = 2;
    double segment_spacing_m = 100.0;
    GridLayout layout{467.0, 3};
    std::vector<std::int64_t> populations;
    std::optional<std::filesystem::path> file;
};

struct RunConfig {
    NetworkSpec network;
    FragilityProfile fragility = FragilityProfile::defaults();
    RepairTimeTable repair = RepairTimeTable::defaults();
    RewardSpec reward;
    std::vector<SelectorConfig> selectors = {default_selector(SelectorKind::Base),
                                             default_selector(SelectorKind::LinearBelief)};
    int scenarios = 4;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::filesystem::path out = "out";
    std::optional<std::filesystem::path> scenario_file;
    bool deterministic = false;
    std::optional<int> n_units;
    double ru_fraction = 0.15;
    bool ru_round_up = false;

    EpisodeOptions episode_options() const { return {n_units, ru_fraction, ru_round_up, deterministic}; }
};

/// Parses a JSON configuration document. Missing keys keep their defaults;
/// unknown keys and ill-typed values raise ConfigError naming the field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Cross-field checks: budgets, gamma/zeta ranges, profile sums, counts.
void validate_config(const RunConfig& config);

Network build_network(const RunConfig& config);

/// Scenarios from the scenario file when set, else sampled from the profile.
std::vector<DamageScenario> make_scenarios(const RunConfig& config, const Network& net);

/// Runs the batch, writes CSVs plus network.json and scenarios.jsonl under
/// config.out, and prints one summary line per selector. Returns the exit status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Flag parsing on top of an optional --config file, then run().
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace epnr
