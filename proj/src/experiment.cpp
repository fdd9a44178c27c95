#include "epnr/experiment.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

namespace epnr {

namespace {

constexpr std::array<std::string_view, 4> kSelectorNames = {"base", "uniform_rollout", "linear_belief", "adaptive"};

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Action choose_action(const Network& net, const State& state, const SelectorConfig& selector,
                     const RandomBasePolicy& policy, const RewardSpec& spec, const RolloutConfig& rollout, Rng& rng) {
    if (state.damaged_count() <= policy.n_units()) return assign_all_damaged(state);
    switch (selector.kind) {
        case SelectorKind::Base:
            return policy(state);
        case SelectorKind::UniformRollout: {
            const auto candidates = sample_candidates(state, policy.n_units(), selector.alpha_tilde, rng);
            return uniform_rollout(net, state, candidates, policy, selector.beta, spec, rollout, rng).action;
        }
        case SelectorKind::LinearBelief:
            return rollout_linear_belief(net, state, policy, selector.alpha_tilde, selector.beta, spec, rollout, rng)
                .action;
        case SelectorKind::Adaptive:
            return adaptive_rollout_linear_belief(net, state, policy, selector.alpha_tilde, selector.b_star, spec,
                                                  rollout, rng)
                .action;
    }
    throw ContractViolation("unknown selector kind");
}

}  // namespace

std::string_view to_string(SelectorKind kind) { return kSelectorNames.at(static_cast<std::size_t>(kind)); }

SelectorKind selector_kind_from_string(std::string_view name) {
    for (std::size_t k = 0; k < kSelectorNames.size(); ++k)
        if (kSelectorNames[k] == name) return static_cast<SelectorKind>(k);
    throw ConfigError("unknown selector '" + std::string(name) +
                      "' (expected base, uniform_rollout, linear_belief or adaptive)");
}

std::int64_t SelectorConfig::epoch_budget() const {
    switch (kind) {
        case SelectorKind::Base:
            return 0;
        case SelectorKind::Adaptive:
            return alpha_tilde + b_star;
        default:
            return alpha_tilde * beta;
    }
}

void SelectorConfig::validate() const {
    const std::string where = "selector " + name() + ": ";
    if (horizon < 1) throw ConfigError(where + "horizon must be >= 1");
    if (alpha_tilde < 1) throw ConfigError(where + "alpha_tilde must be >= 1");
    if (beta < 1) throw ConfigError(where + "beta must be >= 1");
    if (b_star < 0) throw ConfigError(where + "b_star must be >= 0");
    if (threads < 1) throw ConfigError(where + "threads must be >= 1");
    if (budget && kind != SelectorKind::Base && epoch_budget() > *budget)
        throw ConfigError(where + "per-epoch budget " + std::to_string(epoch_budget()) + " exceeds B = " +
                          std::to_string(*budget));
}

SelectorConfig default_selector(SelectorKind kind) {
    SelectorConfig s;
    s.kind = kind;
    switch (kind) {
        case SelectorKind::Base:
            break;
        case SelectorKind::UniformRollout:
            s.alpha_tilde = 100;
            s.beta = 20;
            break;
        case SelectorKind::LinearBelief:
            s.alpha_tilde = 500;
            s.beta = 20;
            break;
        case SelectorKind::Adaptive:
            s.alpha_tilde = 1000;
            s.beta = 1;
            s.b_star = 5000;
            break;
    }
    return s;
}

int unit_count(int damaged, double fraction, bool round_up) {
    if (damaged <= 0) return 0;
    const double raw = fraction * damaged;
    const double units = round_up ? std::ceil(raw - 1e-9) : std::floor(raw + 1e-9);
    return std::max(1, static_cast<int>(units));
}

EpisodeTrace run_recovery(const Network& net, const DamageScenario& scenario, const RepairTimeTable& table,
                          const SelectorConfig& selector, const RewardSpec& spec, std::uint64_t seed,
                          const EpisodeOptions& options) {
    selector.validate();
    spec.validate();
    State state = initial_state(net, scenario, table);
    std::vector<double> hidden = scenario.realized_duration;
    const SimMode env_mode = options.deterministic ? SimMode::Deterministic : SimMode::StochasticEnv;
    const RolloutConfig rollout{selector.horizon,
                                options.deterministic ? SimMode::Deterministic : SimMode::StochasticPlanner,
                                selector.threads};

    EpisodeTrace trace;
    const int damaged = state.damaged_count();
    trace.total_population = net.total_population();
    trace.initial_powered = powered_population(net, state);
    trace.n_units = options.n_units ? *options.n_units : unit_count(damaged, options.ru_fraction, options.ru_round_up);
    if (damaged == 0) {
        trace.benefit = static_cast<double>(trace.initial_powered);
        return trace;
    }
    if (trace.n_units < 1) throw ConfigError("at least one repair unit is required");

    RewardSpec goal_spec = spec;
    goal_spec.objective = Objective::R1;
    const std::int64_t goal = goal_population(goal_spec, net);
    bool reached = trace.initial_powered >= goal;

    const RandomBasePolicy policy(trace.n_units, derive_seed(seed, 1));
    Rng planner_rng(derive_seed(seed, 2));
    Rng env_rng(derive_seed(seed, 3));
    std::vector<int> completed;
    while (!state.fully_repaired()) {
        const Action action = choose_action(net, state, selector, policy, spec, rollout, planner_rng);
        if (!is_valid_action(state, action, trace.n_units))
            throw std::runtime_error("selector " + selector.name() + " returned an invalid action at epoch " +
                                     std::to_string(state.epoch) + " (assigned " + std::to_string(action.count()) +
                                     ", damaged " + std::to_string(state.damaged_count()) + ", units " +
                                     std::to_string(trace.n_units) + ")");
        StepRecord step;
        step.epoch = state.epoch;
        step.assigned = action.targets();
        step.r = advance(state, action, env_mode, env_rng,
                         env_mode == SimMode::StochasticEnv ? std::span<double>(hidden) : std::span<double>(),
                         completed);
        step.completed = completed;
        step.elapsed_days = state.elapsed_days;
        step.powered = powered_population(net, state);
        if (!reached && step.powered >= goal) {
            reached = true;
            trace.days_to_goal = step.elapsed_days;
        }
        trace.steps.push_back(std::move(step));
    }
    trace.t_tot_days = state.elapsed_days;
    trace.benefit = benefit_metric(trace);
    return trace;
}

std::vector<double> cumulative_moving_average(std::span<const double> series) {
    if (series.empty()) throw ContractViolation("cumulative_moving_average of an empty series");
    std::vector<double> out;
    out.reserve(series.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        sum += series[k];
        out.push_back(sum / static_cast<double>(k + 1));
    }
    return out;
}

double benefit_metric(const EpisodeTrace& trace) {
    if (!(trace.t_tot_days > 0.0)) throw ContractViolation("benefit_metric needs t_tot > 0");
    double area = 0.0;
    for (const auto& step : trace.steps) area += static_cast<double>(step.powered) * step.r;
    return area / trace.t_tot_days;
}

std::vector<double> BatchResult::days_to_goal(std::size_t selector) const {
    std::vector<double> out;
    for (const auto& t : traces.at(selector)) out.push_back(t.days_to_goal);
    return out;
}

std::vector<double> BatchResult::benefit(std::size_t selector) const {
    std::vector<double> out;
    for (const auto& t : traces.at(selector)) out.push_back(t.benefit);
    return out;
}

BatchResult run_batch(const Network& net, const std::vector<DamageScenario>& scenarios,
                      const std::vector<SelectorConfig>& selectors, const RepairTimeTable& table,
                      const RewardSpec& spec, std::uint64_t master_seed, int jobs, const EpisodeOptions& options) {
    if (scenarios.empty()) throw ContractViolation("run_batch needs at least one scenario");
    if (selectors.empty()) throw ContractViolation("run_batch needs at least one selector");
    for (const auto& s : selectors) s.validate();
    for (const auto& sc : scenarios) validate_scenario(sc, net.size());

    BatchResult batch;
    batch.selectors = selectors;
    batch.scenarios = scenarios;
    for (std::size_t j = 0; j < scenarios.size(); ++j) batch.seeds.push_back(derive_seed(master_seed, j));
    batch.traces.assign(selectors.size(), std::vector<EpisodeTrace>(scenarios.size()));

    const std::size_t tasks = selectors.size() * scenarios.size();
    parallel_for(tasks, jobs, [&](std::size_t task) {
        const std::size_t s = task / scenarios.size();
        const std::size_t j = task % scenarios.size();
        batch.traces[s][j] = run_recovery(net, scenarios[j], table, selectors[s], spec, batch.seeds[j], options);
    });

    nlohmann::ordered_json digest;
    digest["master_seed"] = master_seed;
    digest["objective"] = spec.objective == Objective::R1 ? "r1" : "r2";
    digest["zeta"] = spec.zeta;
    digest["gamma"] = spec.gamma;
    digest["deterministic"] = options.deterministic;
    for (const auto& s : selectors)
        digest["selectors"].push_back({s.name(), to_string(s.kind), s.horizon, s.alpha_tilde, s.beta, s.b_star});
    for (const auto& sc : scenarios) digest["scenario_seeds"].push_back(sc.seed);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(digest.dump())));
    batch.config_digest = hex;
    return batch;
}

std::vector<std::pair<double, double>> average_recovery_path(std::span<const EpisodeTrace> traces, double step) {
    if (traces.empty()) throw ContractViolation("average_recovery_path needs at least one trace");
    if (!(step > 0.0)) throw ContractViolation("grid step must be positive");
    double horizon = 0.0;
    for (const auto& t : traces) horizon = std::max(horizon, t.t_tot_days);
    const auto points = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)) + 1;

    std::vector<std::pair<double, double>> path(points);
    for (std::size_t k = 0; k < points; ++k) path[k].first = static_cast<double>(k) * step;
    for (const auto& t : traces) {
        std::size_t next = 0;
        std::int64_t value = t.initial_powered;
        for (std::size_t k = 0; k < points; ++k) {
            while (next < t.steps.size() && t.steps[next].elapsed_days <= path[k].first)
                value = t.steps[next++].powered;
            path[k].second += static_cast<double>(value);
        }
    }
    for (auto& p : path) p.second /= static_cast<double>(traces.size());
    return path;
}

PairedTest paired_t_test_less(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ContractViolation("paired test needs >= 2 matched pairs");
    PairedTest out;
    out.n = a.size();
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    out.mean_difference = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(out.n);
    double ss = 0.0;
    for (double d : diff) ss += (d - out.mean_difference) * (d - out.mean_difference);
    const double sd = std::sqrt(ss / static_cast<double>(out.n - 1));
    out.standard_error = sd / std::sqrt(static_cast<double>(out.n));
    if (out.standard_error > 0.0) {
        out.t_statistic = out.mean_difference / out.standard_error;
        const boost::math::students_t dist(static_cast<double>(out.n - 1));
        out.p_value = boost::math::cdf(dist, out.t_statistic);
    } else {
        out.t_statistic = out.mean_difference < 0.0   ? -std::numeric_limits<double>::infinity()
                          : out.mean_difference > 0.0 ? std::numeric_limits<double>::infinity()
                                                      : 0.0;
        out.p_value = out.mean_difference < 0.0 ? 0.0 : (out.mean_difference > 0.0 ? 1.0 : 0.5);
    }
    return out;
}

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
    out << "epoch,elapsed_days,n_t,r_t\n";
    for (const auto& s : trace.steps)
        out << s.epoch << ',' << format_number(s.elapsed_days) << ',' << s.powered << ',' << format_number(s.r)
            << '\n';
}

void write_summary_csv(std::ostream& out, const BatchResult& batch) {
    out << "scenario_id,selector,days_to_goal,t_tot,benefit\n";
    for (std::size_t j = 0; j < batch.scenarios.size(); ++j)
        for (std::size_t s = 0; s < batch.selectors.size(); ++s) {
            const auto& t = batch.traces[s][j];
            out << j << ',' << batch.selectors[s].name() << ',' << format_number(t.days_to_goal) << ','
                << format_number(t.t_tot_days) << ',' << format_number(t.benefit) << '\n';
        }
}

void write_moving_average_csv(std::ostream& out, const BatchResult& batch) {
    out << "selector,scenarios,days_to_goal_cma,benefit_cma\n";
    for (std::size_t s = 0; s < batch.selectors.size(); ++s) {
        const auto days = cumulative_moving_average(batch.days_to_goal(s));
        const auto benefit = cumulative_moving_average(batch.benefit(s));
        for (std::size_t k = 0; k < days.size(); ++k)
            out << batch.selectors[s].name() << ',' << (k + 1) << ',' << format_number(days[k]) << ','
                << format_number(benefit[k]) << '\n';
    }
}

void write_average_path_csv(std::ostream& out, const BatchResult& batch, double step) {
    out << "selector,day,mean_powered\n";
    for (std::size_t s = 0; s < batch.selectors.size(); ++s)
        for (const auto& [day, powered] : average_recovery_path(batch.traces[s], step))
            out << batch.selectors[s].name() << ',' << format_number(day) << ',' << format_number(powered) << '\n';
}

void write_batch_outputs(const std::filesystem::path& dir, const BatchResult& batch) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    for (std::size_t s = 0; s < batch.selectors.size(); ++s)
        for (std::size_t j = 0; j < batch.scenarios.size(); ++j) {
            char name[256];
            std::snprintf(name, sizeof name, "trace_%s_%03zu.csv", batch.selectors[s].name().c_str(), j);
            auto f = open(name);
            write_trace_csv(f, batch.traces[s][j]);
        }
    {
        auto f = open("summary.csv");
        write_summary_csv(f, batch);
    }
    {
        auto f = open("moving_average.csv");
        write_moving_average_csv(f, batch);
    }
    {
        auto f = open("average_path.csv");
        write_average_path_csv(f, batch);
    }
}

}  // namespace epnr
