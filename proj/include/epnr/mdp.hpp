#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "epnr/common.hpp"
#include "epnr/hazard.hpp"
#include "epnr/network.hpp"

namespace epnr {

/// Floor for the remaining repair time of an assigned component that did not
/// complete, so it never reads as repaired without completing.
inline constexpr double kRhoFloor = 1e-6;

/// Decision-epoch state: damage and remaining repair time per component.
/// rho[l] == 0 exactly when damage[l] is Undamaged.
struct State {
    std::vector<DamageState> damage;
    std::vector<double> rho;
    int epoch = 0;
    double elapsed_days = 0.0;

    std::size_t size() const noexcept { return damage.size(); }
    bool is_damaged(int l) const { return damage[static_cast<std::size_t>(l)] != DamageState::Undamaged; }
    int damaged_count() const;
    std::vector<int> damaged_components() const;  // ascending ids
    bool fully_repaired() const { return damaged_count() == 0; }

    bool operator==(const State&) const = default;
};

/// rho_0 from the mean repair times of the scenario's damage states.
State initial_state(const Network& net, const DamageScenario& scenario, const RepairTimeTable& table);

std::int64_t powered_population(const Network& net, const State& state);

/// Which components receive a repair unit this epoch.
struct Action {
    std::vector<std::uint8_t> assign;

    static Action from_targets(std::size_t n_components, std::span<const int> targets);
    std::vector<int> targets() const;
    int count() const;

    bool operator==(const Action&) const = default;
};

/// Sum of assignments equals min(N, M_t) and only damaged components are assigned.
bool is_valid_action(const State& state, const Action& action, int n_units);

enum class SimMode {
    StochasticPlanner,  // exponential race with means rho (fresh draws each call)
    StochasticEnv,      // race resolved by the scenario's realized remaining work
    Deterministic,      // r = min rho over the assigned components
};

struct TransitionOutcome {
    State next;
    double r = 0.0;               // inter-completion time in days
    std::vector<int> completed;   // components repaired at this epoch
};

/// In-place transition. Only assigned components make progress; completed ones
/// jump straight to Undamaged. `hidden` holds the remaining realized work per
/// component and is required (and updated) in StochasticEnv mode.
/// Returns r. Throws ContractViolation if nothing damaged is assigned.
double advance(State& state, const Action& action, SimMode mode, Rng& rng, std::span<double> hidden,
               std::vector<int>& completed);

TransitionOutcome transition(const State& state, const Action& action, SimMode mode, Rng& rng,
                             std::span<double> hidden = {});

enum class Objective { R1, R2 };

struct RewardSpec {
    Objective objective = Objective::R1;
    double zeta = 0.8;
    double gamma = 0.99;
    /// When positive, per-step rewards are scaled into [0, 1]:
    /// R1 -> min(r / unit_days, 1), R2 -> min(n r / (p unit_days), 1).
    double unit_days = 0.0;

    void validate() const;  // throws ConfigError
};

/// Persons needed for the goal: ceil(zeta p) for R1, p for R2.
std::int64_t goal_population(const RewardSpec& spec, const Network& net);

bool is_goal(const RewardSpec& spec, const Network& net, const State& state);

/// Reward for one step ending in a state with `powered` persons served.
/// R1 -> r (minimized), R2 -> n_t r_t without the 1/t_tot factor.
double step_reward(const RewardSpec& spec, std::int64_t powered, double r, std::int64_t total_population);

double reward(const RewardSpec& spec, const Network& net, const TransitionOutcome& outcome);

using PolicyFn = std::function<Action(const State&)>;

/// One Monte-Carlo sample of the h-step discounted return: the given action,
/// then `base_policy` for up to h-1 epochs, stopping early in a goal state.
/// Discounting is per decision epoch with gamma^0 on the first step.
/// `mode` must be StochasticPlanner or Deterministic.
double sim_q(const Network& net, const State& state, const Action& action, const PolicyFn& base_policy, int h,
             const RewardSpec& spec, SimMode mode, Rng& rng);

/// gamma^h r_max / (1 - gamma): truncation error of an h-step return.
double horizon_error_bound(double gamma, int h, double r_max);

}  // namespace epnr
