#include "epnr/mdp.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace epnr {

int State::damaged_count() const {
    return static_cast<int>(
        std::count_if(damage.begin(), damage.end(), [](DamageState s) { return s != DamageState::Undamaged; }));
}

std::vector<int> State::damaged_components() const {
    std::vector<int> out;
    for (std::size_t l = 0; l < damage.size(); ++l)
        if (damage[l] != DamageState::Undamaged) out.push_back(static_cast<int>(l));
    return out;
}

State initial_state(const Network& net, const DamageScenario& scenario, const RepairTimeTable& table) {
    validate_scenario(scenario, net.size());
    State s;
    s.damage = scenario.initial_state;
    s.rho.resize(net.size());
    for (std::size_t l = 0; l < net.size(); ++l) s.rho[l] = table.mean(net.components()[l].kind, s.damage[l]);
    return s;
}

std::int64_t powered_population(const Network& net, const State& state) {
    if (state.size() != net.size()) throw ContractViolation("state length must equal L");
    return net.powered_population_by([&](int c) { return state.is_damaged(c); });
}

Action Action::from_targets(std::size_t n_components, std::span<const int> targets) {
    Action a;
    a.assign.assign(n_components, 0);
    for (int t : targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= n_components) throw ContractViolation("target out of range");
        a.assign[static_cast<std::size_t>(t)] = 1;
    }
    return a;
}

std::vector<int> Action::targets() const {
    std::vector<int> out;
    for (std::size_t l = 0; l < assign.size(); ++l)
        if (assign[l]) out.push_back(static_cast<int>(l));
    return out;
}

int Action::count() const { return static_cast<int>(std::count(assign.begin(), assign.end(), std::uint8_t{1})); }

bool is_valid_action(const State& state, const Action& action, int n_units) {
    if (action.assign.size() != state.size() || n_units < 1) return false;
    int assigned = 0;
    for (std::size_t l = 0; l < state.size(); ++l) {
        if (action.assign[l] > 1) return false;
        if (action.assign[l]) {
            if (state.damage[l] == DamageState::Undamaged) return false;
            ++assigned;
        }
    }
    return assigned == std::min(n_units, state.damaged_count());
}

double advance(State& state, const Action& action, SimMode mode, Rng& rng, std::span<double> hidden,
               std::vector<int>& completed) {
    const std::size_t n = state.size();
    if (action.assign.size() != n) throw ContractViolation("action length must equal L");
    if (mode == SimMode::StochasticEnv && hidden.size() != n)
        throw ContractViolation("StochasticEnv mode needs the hidden remaining work of every component");

    completed.clear();
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < n; ++l) {
        if (!action.assign[l]) continue;
        if (state.damage[l] == DamageState::Undamaged)
            throw ContractViolation("component " + std::to_string(l) + " is assigned but undamaged");
        double finish = 0.0;
        switch (mode) {
            case SimMode::Deterministic:
                finish = state.rho[l];
                break;
            case SimMode::StochasticPlanner:
                finish = std::max(std::exponential_distribution<double>(1.0 / state.rho[l])(rng),
                                  std::numeric_limits<double>::min());
                break;
            case SimMode::StochasticEnv:
                finish = hidden[l];
                break;
        }
        if (finish < r) {
            r = finish;
            completed.assign(1, static_cast<int>(l));
        } else if (finish == r) {
            completed.push_back(static_cast<int>(l));
        }
    }
    if (completed.empty()) throw ContractViolation("transition needs at least one assigned damaged component");

    std::size_t next_done = 0;
    for (std::size_t l = 0; l < n; ++l) {
        if (!action.assign[l]) continue;
        if (next_done < completed.size() && completed[next_done] == static_cast<int>(l)) {
            ++next_done;
            state.damage[l] = DamageState::Undamaged;
            state.rho[l] = 0.0;
            if (!hidden.empty()) hidden[l] = 0.0;
            continue;
        }
        if (mode == SimMode::Deterministic) {
            state.rho[l] -= r;
        } else {
            state.rho[l] = std::max(state.rho[l] - r, kRhoFloor);
        }
        if (mode == SimMode::StochasticEnv) hidden[l] -= r;
    }
    ++state.epoch;
    state.elapsed_days += r;
    return r;
}

TransitionOutcome transition(const State& state, const Action& action, SimMode mode, Rng& rng,
                             std::span<double> hidden) {
    TransitionOutcome out;
    out.next = state;
    out.r = advance(out.next, action, mode, rng, hidden, out.completed);
    return out;
}

void RewardSpec::validate() const {
    if (!(zeta > 0.0 && zeta <= 1.0)) throw ConfigError("zeta must lie in (0, 1]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(unit_days >= 0.0) || !std::isfinite(unit_days)) throw ConfigError("unit_days must be >= 0");
}

std::int64_t goal_population(const RewardSpec& spec, const Network& net) {
    const auto p = net.total_population();
    if (spec.objective == Objective::R2) return p;
    // Guard against zeta * p landing a hair above an integer.
    return static_cast<std::int64_t>(std::ceil(spec.zeta * static_cast<double>(p) - 1e-9));
}

bool is_goal(const RewardSpec& spec, const Network& net, const State& state) {
    return powered_population(net, state) >= goal_population(spec, net);
}

double step_reward(const RewardSpec& spec, std::int64_t powered, double r, std::int64_t total_population) {
    if (spec.objective == Objective::R1) {
        return spec.unit_days > 0.0 ? std::min(r / spec.unit_days, 1.0) : r;
    }
    const double raw = static_cast<double>(powered) * r;
    if (spec.unit_days > 0.0) {
        if (total_population <= 0) return 0.0;
        return std::min(raw / (static_cast<double>(total_population) * spec.unit_days), 1.0);
    }
    return raw;
}

double reward(const RewardSpec& spec, const Network& net, const TransitionOutcome& outcome) {
    return step_reward(spec, powered_population(net, outcome.next), outcome.r, net.total_population());
}

double sim_q(const Network& net, const State& state, const Action& action, const PolicyFn& base_policy, int h,
             const RewardSpec& spec, SimMode mode, Rng& rng) {
    if (h < 1) throw ContractViolation("sim_q horizon must be >= 1");
    if (mode == SimMode::StochasticEnv) throw ContractViolation("sim_q runs on the planner model, not the environment");

    const std::int64_t p = net.total_population();
    const std::int64_t goal = goal_population(spec, net);
    auto served = [&](const State& s) { return net.powered_population_by([&](int c) { return s.is_damaged(c); }); };

    State s = state;
    std::vector<int> completed;
    double r = advance(s, action, mode, rng, {}, completed);
    std::int64_t powered = served(s);
    double total = step_reward(spec, powered, r, p);
    double discount = 1.0;
    for (int lambda = 1; lambda < h; ++lambda) {
        if (powered >= goal || s.fully_repaired()) break;
        discount *= spec.gamma;
        const Action next = base_policy(s);
        r = advance(s, next, mode, rng, {}, completed);
        powered = served(s);
        total += discount * step_reward(spec, powered, r, p);
    }
    return total;
}

double horizon_error_bound(double gamma, int h, double r_max) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ContractViolation("horizon_error_bound needs gamma in (0, 1)");
    if (h < 0 || !(r_max >= 0.0)) throw ContractViolation("horizon_error_bound needs h >= 0 and r_max >= 0");
    return std::pow(gamma, h) * r_max / (1.0 - gamma);
}

}  // namespace epnr
