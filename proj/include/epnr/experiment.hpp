#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epnr/hazard.hpp"
#include "epnr/mdp.hpp"
#include "epnr/network.hpp"
#include "epnr/solver.hpp"

namespace epnr {

enum class SelectorKind { Base, UniformRollout, LinearBelief, Adaptive };

std::string_view to_string(SelectorKind kind);
SelectorKind selector_kind_from_string(std::string_view name);

/// How actions are chosen during a recovery episode.
struct SelectorConfig {
    SelectorKind kind = SelectorKind::Base;
    std::string label;  // defaults to the kind name
    int horizon = 10;
    std::int64_t alpha_tilde = 100;
    int beta = 10;
    std::int64_t b_star = 0;
    std::optional<std::int64_t> budget;  // B; checked against the budget identities when set
    int threads = 1;

    std::string name() const { return label.empty() ? std::string(to_string(kind)) : label; }
    /// Simulator calls per nontrivial epoch: alpha*beta, or alpha + B* for the adaptive variant.
    std::int64_t epoch_budget() const;
    void validate() const;  // throws ConfigError
};

/// Per-kind defaults: linear_belief alpha 500 / beta 20, uniform_rollout alpha 100 /
/// beta 20, adaptive alpha 1000 / B* 5000, all with h = 10.
SelectorConfig default_selector(SelectorKind kind);

struct EpisodeOptions {
    std::optional<int> n_units;  // overrides the fraction rule
    double ru_fraction = 0.15;
    bool ru_round_up = false;    // floor by default; at least one unit either way
    bool deterministic = false;  // environment and planner both use the deterministic simulator
};

/// Repair units for a scenario: fraction * damaged rounded down (or up), min 1.
int unit_count(int damaged, double fraction, bool round_up);

struct StepRecord {
    int epoch = 0;
    double elapsed_days = 0.0;  // after this step
    std::int64_t powered = 0;   // n_t, after the completion
    double r = 0.0;
    std::vector<int> assigned;
    std::vector<int> completed;

    bool operator==(const StepRecord&) const = default;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    int n_units = 0;
    std::int64_t total_population = 0;
    std::int64_t initial_powered = 0;
    double days_to_goal = 0.0;  // first completion reaching ceil(zeta p) persons
    double t_tot_days = 0.0;    // full restoration
    double benefit = 0.0;       // sum n_t r_t / t_tot

    bool operator==(const EpisodeTrace&) const = default;
};

/// Select -> environment transition until every component is repaired.
/// Throws std::runtime_error if the selector produces an invalid action.
EpisodeTrace run_recovery(const Network& net, const DamageScenario& scenario, const RepairTimeTable& table,
                          const SelectorConfig& selector, const RewardSpec& spec, std::uint64_t seed,
                          const EpisodeOptions& options = {});

/// out[k] = mean(series[0..k]). Throws ContractViolation when empty.
std::vector<double> cumulative_moving_average(std::span<const double> series);

/// sum n_t r_t / t_tot. Throws ContractViolation when t_tot <= 0.
double benefit_metric(const EpisodeTrace& trace);

struct BatchResult {
    std::vector<SelectorConfig> selectors;
    std::vector<DamageScenario> scenarios;
    std::vector<std::vector<EpisodeTrace>> traces;  // [selector][scenario]
    std::vector<std::uint64_t> seeds;               // planner seed per scenario, shared by selectors
    std::string config_digest;

    std::vector<double> days_to_goal(std::size_t selector) const;
    std::vector<double> benefit(std::size_t selector) const;
};

/// Paired runs: every selector sees the same scenarios and planner seeds.
/// Output is identical for any `jobs`.
BatchResult run_batch(const Network& net, const std::vector<DamageScenario>& scenarios,
                      const std::vector<SelectorConfig>& selectors, const RepairTimeTable& table,
                      const RewardSpec& spec, std::uint64_t master_seed, int jobs,
                      const EpisodeOptions& options = {});

/// Mean powered population over traces on a grid 0, step, 2 step, ... up to
/// the longest t_tot, each trace held at its last value (step interpolation).
std::vector<std::pair<double, double>> average_recovery_path(std::span<const EpisodeTrace> traces,
                                                             double step = 0.1);

/// One-sided paired t-test of H1: mean(a - b) < 0.
struct PairedTest {
    std::size_t n = 0;
    double mean_difference = 0.0;
    double standard_error = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
};

PairedTest paired_t_test_less(std::span<const double> a, std::span<const double> b);

/// Shortest round-trip decimal text with '.' separator.
std::string format_number(double value);

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);
void write_summary_csv(std::ostream& out, const BatchResult& batch);
void write_moving_average_csv(std::ostream& out, const BatchResult& batch);
void write_average_path_csv(std::ostream& out, const BatchResult& batch, double step = 0.1);

/// trace_<selector>_<scenario>.csv, summary.csv, moving_average.csv, average_path.csv.
void write_batch_outputs(const std::filesystem::path& dir, const BatchResult& batch);

}  // namespace epnr
