#include "epnr/hazard.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

namespace epnr {

namespace {

constexpr std::array<std::string_view, kDamageStates> kStateNames = {"undamaged", "minor", "moderate", "extensive",
                                                                     "complete"};

}  // namespace

std::string_view to_string(DamageState state) { return kStateNames.at(static_cast<std::size_t>(state)); }

FragilityProfile FragilityProfile::defaults() {
    FragilityProfile p;
    p.mass[static_cast<std::size_t>(ComponentKind::Substation)] = {0.4, 0.2, 0.2, 0.1, 0.1};
    p.mass[static_cast<std::size_t>(ComponentKind::TransmissionSegment)] = {0.4, 0.3, 0.15, 0.1, 0.05};
    p.mass[static_cast<std::size_t>(ComponentKind::DistributionSegment)] = {0.4, 0.3, 0.15, 0.1, 0.05};
    return p;
}

FragilityProfile FragilityProfile::intact() {
    FragilityProfile p;
    for (auto& row : p.mass) row = {1.0, 0.0, 0.0, 0.0, 0.0};
    return p;
}

void FragilityProfile::validate() const {
    for (std::size_t k = 0; k < kComponentKinds; ++k) {
        double sum = 0.0;
        for (double m : mass[k]) {
            if (!(m >= 0.0) || !std::isfinite(m))
                throw ConfigError("fragility mass for " + std::string(to_string(static_cast<ComponentKind>(k))) +
                                  " has a negative or non-finite entry");
            sum += m;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("fragility mass for " + std::string(to_string(static_cast<ComponentKind>(k))) +
                              " must sum to 1");
    }
}

double FragilityProfile::damaged_probability(ComponentKind kind) const {
    const auto& row = mass[static_cast<std::size_t>(kind)];
    return std::accumulate(row.begin() + 1, row.end(), 0.0);
}

RepairTimeTable RepairTimeTable::defaults() {
    RepairTimeTable t;
    t.mean_days[static_cast<std::size_t>(ComponentKind::Substation)] = {0.0, 1.0, 3.0, 7.0, 30.0};
    t.mean_days[static_cast<std::size_t>(ComponentKind::TransmissionSegment)] = {0.0, 0.5, 1.0, 1.0, 2.0};
    t.mean_days[static_cast<std::size_t>(ComponentKind::DistributionSegment)] = {0.0, 0.5, 1.0, 1.0, 1.0};
    return t;
}

void RepairTimeTable::validate() const {
    for (std::size_t k = 0; k < kComponentKinds; ++k) {
        if (mean_days[k][0] != 0.0) throw ConfigError("repair time of an undamaged component must be 0");
        for (std::size_t s = 1; s < kDamageStates; ++s)
            if (!(mean_days[k][s] > 0.0) || !std::isfinite(mean_days[k][s]))
                throw ConfigError("repair times of damaged states must be positive and finite");
    }
}

int DamageScenario::damaged_count() const {
    return static_cast<int>(std::count_if(initial_state.begin(), initial_state.end(),
                                          [](DamageState s) { return s != DamageState::Undamaged; }));
}

double sample_repair_time(ComponentKind kind, DamageState state, const RepairTimeTable& table, Rng& rng) {
    if (state == DamageState::Undamaged) return 0.0;
    std::exponential_distribution<double> draw(1.0 / table.mean(kind, state));
    return std::max(draw(rng), kMinDurationDays);
}

DamageScenario sample_scenario(const Network& net, const FragilityProfile& profile, const RepairTimeTable& table,
                               std::uint64_t seed) {
    profile.validate();
    Rng rng(derive_seed(seed, 0x5ca1ab1eULL));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    DamageScenario scenario;
    scenario.seed = seed;
    scenario.initial_state.reserve(net.size());
    scenario.realized_duration.reserve(net.size());
    for (const auto& c : net.components()) {
        const auto& row = profile.mass[static_cast<std::size_t>(c.kind)];
        // Inverse-CDF draw so the mapping from uniforms to states is fixed.
        const double u = unit(rng);
        double cumulative = 0.0;
        std::size_t s = 0;
        for (; s + 1 < kDamageStates; ++s) {
            cumulative += row[s];
            if (u < cumulative) break;
        }
        const auto state = static_cast<DamageState>(s);
        scenario.initial_state.push_back(state);
        scenario.realized_duration.push_back(sample_repair_time(c.kind, state, table, rng));
    }
    return scenario;
}

void validate_scenario(const DamageScenario& scenario, std::size_t n_components) {
    if (scenario.initial_state.size() != n_components || scenario.realized_duration.size() != n_components)
        throw ParseError("scenario " + std::to_string(scenario.seed) + " has " +
                         std::to_string(scenario.initial_state.size()) + " states / " +
                         std::to_string(scenario.realized_duration.size()) + " durations, network has " +
                         std::to_string(n_components) + " components");
    for (std::size_t l = 0; l < n_components; ++l) {
        const double d = scenario.realized_duration[l];
        if (!std::isfinite(d) || d < 0.0)
            throw ParseError("component " + std::to_string(l) + ": negative or non-finite duration");
        const bool undamaged = scenario.initial_state[l] == DamageState::Undamaged;
        if (undamaged != (d == 0.0))
            throw ParseError("component " + std::to_string(l) +
                             ": duration must be 0 exactly when the component is undamaged");
    }
}

void write_scenarios(std::ostream& out, const std::vector<DamageScenario>& scenarios) {
    for (const auto& s : scenarios) {
        nlohmann::ordered_json line;
        line["seed"] = s.seed;
        auto& states = line["states"] = nlohmann::ordered_json::array();
        for (auto st : s.initial_state) states.push_back(static_cast<int>(st));
        line["durations"] = s.realized_duration;
        out << line.dump() << '\n';
    }
}

std::vector<DamageScenario> read_scenarios(std::istream& in, std::size_t n_components) {
    std::vector<DamageScenario> scenarios;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        DamageScenario s;
        try {
            const auto doc = nlohmann::json::parse(text);
            s.seed = doc.at("seed").get<std::uint64_t>();
            for (const auto& v : doc.at("states")) {
                const int code = v.get<int>();
                if (code < 0 || code >= static_cast<int>(kDamageStates))
                    throw ParseError("damage state code out of range: " + std::to_string(code));
                s.initial_state.push_back(static_cast<DamageState>(code));
            }
            s.realized_duration = doc.at("durations").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("scenario line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError("scenario line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            validate_scenario(s, n_components);
        } catch (const ParseError& e) {
            throw ParseError("scenario line " + std::to_string(line_no) + ": " + e.what());
        }
        scenarios.push_back(std::move(s));
    }
    return scenarios;
}

void save_scenarios(const std::filesystem::path& path, const std::vector<DamageScenario>& scenarios) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_scenarios(out, scenarios);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<DamageScenario> load_scenarios(const std::filesystem::path& path, std::size_t n_components) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scenario file " + path.string());
    return read_scenarios(in, n_components);
}

}  // namespace epnr
