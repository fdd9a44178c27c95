#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "epnr/common.hpp"
#include "epnr/network.hpp"

namespace epnr {

/// Ordered as the columns of the repair-time table; encoded 0..4 on disk.
enum class DamageState : std::uint8_t { Undamaged = 0, Minor = 1, Moderate = 2, Extensive = 3, Complete = 4 };

inline constexpr std::size_t kDamageStates = 5;

std::string_view to_string(DamageState state);

using KindStateTable = std::array<std::array<double, kDamageStates>, kComponentKinds>;

/// Per component kind, a categorical distribution over damage states. Stands
/// in for a ground-motion + fragility-curve evaluation.
struct FragilityProfile {
    KindStateTable mass{};

    /// 60% damaged for every kind: Undamaged 0.4, then Minor..Complete
    /// 0.2/0.2/0.1/0.1 for the substation and 0.3/0.15/0.1/0.05 for line segments.
    static FragilityProfile defaults();
    /// Everything undamaged.
    static FragilityProfile intact();

    void validate() const;  // throws ConfigError
    double damaged_probability(ComponentKind kind) const;
};

/// Expected repair time in days by kind and damage state.
struct RepairTimeTable {
    KindStateTable mean_days{};

    /// Electric sub-station 0/1/3/7/30, transmission 0/0.5/1/1/2, distribution 0/0.5/1/1/1.
    static RepairTimeTable defaults();

    void validate() const;  // throws ConfigError
    double mean(ComponentKind kind, DamageState state) const {
        return mean_days[static_cast<std::size_t>(kind)][static_cast<std::size_t>(state)];
    }
};

/// One sampled post-event damage pattern plus the environment's true repair
/// durations. realized_duration[l] == 0 exactly when initial_state[l] is Undamaged.
struct DamageScenario {
    std::uint64_t seed = 0;
    std::vector<DamageState> initial_state;
    std::vector<double> realized_duration;

    std::size_t size() const noexcept { return initial_state.size(); }
    int damaged_count() const;
    bool operator==(const DamageScenario&) const = default;
};

/// Smallest realized duration; exponential draws that underflow are floored here.
inline constexpr double kMinDurationDays = 1e-6;

/// 0 for Undamaged, else an exponential draw with the table mean.
double sample_repair_time(ComponentKind kind, DamageState state, const RepairTimeTable& table, Rng& rng);

/// Pure function of its arguments: damage states drawn independently per
/// component from profile[kind], then durations via sample_repair_time.
DamageScenario sample_scenario(const Network& net, const FragilityProfile& profile, const RepairTimeTable& table,
                               std::uint64_t seed);

/// Throws ParseError on length mismatch, negative or non-finite durations, or
/// a duration that contradicts the damage state.
void validate_scenario(const DamageScenario& scenario, std::size_t n_components);

/// JSON lines: {"seed":u64,"states":[0-4,...],"durations":[days,...]} per line.
void write_scenarios(std::ostream& out, const std::vector<DamageScenario>& scenarios);
std::vector<DamageScenario> read_scenarios(std::istream& in, std::size_t n_components);

void save_scenarios(const std::filesystem::path& path, const std::vector<DamageScenario>& scenarios);
std::vector<DamageScenario> load_scenarios(const std::filesystem::path& path, std::size_t n_components);

}  // namespace epnr
