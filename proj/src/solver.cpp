#include "epnr/solver.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "epnr/least_squares.hpp"

namespace epnr {

namespace {

struct SubsetHash {
    std::size_t operator()(const std::vector<int>& v) const noexcept {
        std::uint64_t h = 0x84222325cbf29ce4ULL;
        for (int x : v) h = splitmix64(h ^ static_cast<std::uint64_t>(x));
        return static_cast<std::size_t>(h);
    }
};

bool better(double a, double b, Sense sense) { return sense == Sense::Maximize ? a > b : a < b; }

std::size_t best_index(std::span<const double> values, Sense sense) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (better(values[i], values[best], sense)) best = i;
    return best;
}

// Per-draw stream so results do not depend on thread count or on how the
// adaptive loop interleaves candidates.
double draw_q(const Network& net, const State& state, const Action& action, const PolicyFn& policy,
              const RewardSpec& spec, const RolloutConfig& config, std::uint64_t round_seed, std::size_t candidate,
              std::int64_t draw) {
    Rng stream(derive_seed(round_seed, candidate, static_cast<std::uint64_t>(draw)));
    return sim_q(net, state, action, policy, config.horizon, spec, config.mode, stream);
}

std::vector<double> uniform_means(const Network& net, const State& state, const CandidateSet& set,
                                  const RandomBasePolicy& base_policy, int beta, const RewardSpec& spec,
                                  const RolloutConfig& config, std::uint64_t round_seed) {
    const PolicyFn policy = base_policy.as_function();
    std::vector<double> means(set.size());
    parallel_for(set.size(), config.threads, [&](std::size_t i) {
        const Action action = set.candidates[i].to_action(state.size());
        double sum = 0.0;
        for (int j = 0; j < beta; ++j) sum += draw_q(net, state, action, policy, spec, config, round_seed, i, j);
        means[i] = sum / beta;
    });
    return means;
}

Action action_from_locations(const State& state, std::span<const int> damaged, std::span<const int> locations) {
    std::vector<int> targets;
    targets.reserve(locations.size());
    for (int m : locations) targets.push_back(damaged[static_cast<std::size_t>(m)]);
    return Action::from_targets(state.size(), targets);
}

std::vector<std::uint8_t> observed_columns(const Eigen::MatrixXd& design) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(design.cols()), 0);
    for (Eigen::Index c = 0; c < design.cols(); ++c) seen[static_cast<std::size_t>(c)] = design.col(c).any() ? 1 : 0;
    return seen;
}

Selection finish_with_belief(const State& state, std::span<const int> damaged, int n_units, Sense sense,
                             Selection selection) {
    Eigen::MatrixXd design = build_design_matrix(selection.candidates, damaged, n_units);
    const auto seen = observed_columns(design);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(selection.q_means.data(),
                                                          static_cast<Eigen::Index>(selection.q_means.size()));
    BeliefModel model = fit_belief_model(std::move(design), std::move(y));
    const auto theta = std::span<const double>(model.theta_hat.data(), static_cast<std::size_t>(model.theta_hat.size()));
    const auto locations = sequential_assignment(theta, static_cast<int>(damaged.size()), n_units, sense, seen);
    selection.action = action_from_locations(state, damaged, locations);
    selection.belief = std::move(model);
    return selection;
}

void check_policy_state(const State& state, const RandomBasePolicy& base_policy) {
    if (state.fully_repaired()) throw ContractViolation("action selection in a fully repaired state");
    if (base_policy.n_units() < 1) throw ContractViolation("at least one repair unit is required");
}

}  // namespace

Action random_base_action(const State& state, int n_units, Rng& rng) {
    if (n_units < 1) throw ContractViolation("random_base_action needs n_units >= 1");
    std::vector<int> damaged = state.damaged_components();
    if (damaged.empty()) throw ContractViolation("random_base_action in a fully repaired state");
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n_units), damaged.size());
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, damaged.size() - 1);
        std::swap(damaged[i], damaged[pick(rng)]);
    }
    return Action::from_targets(state.size(), std::span<const int>(damaged.data(), k));
}

RandomBasePolicy::RandomBasePolicy(int n_units, std::uint64_t seed) : n_units_(n_units), seed_(seed) {
    if (n_units < 1) throw ConfigError("base policy needs at least one repair unit");
}

Action RandomBasePolicy::operator()(const State& state) const {
    std::uint64_t key = splitmix64(seed_ ^ 0xa0761d6478bd642fULL);
    for (std::size_t l = 0; l < state.size(); ++l) {
        key = splitmix64(key ^ std::bit_cast<std::uint64_t>(state.rho[l]));
        key = splitmix64(key ^ static_cast<std::uint64_t>(state.damage[l]));
    }
    Rng rng(key);
    return random_base_action(state, n_units_, rng);
}

double subset_count(int m, int k) {
    if (k < 0 || m < 0 || k > m) return 0.0;
    k = std::min(k, m - k);
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (m - k + i) / i;
    return std::round(c);
}

CandidateSet sample_candidates(const State& state, int n_units, std::int64_t alpha_tilde, Rng& rng) {
    if (alpha_tilde < 1) throw ContractViolation("alpha_tilde must be >= 1");
    if (n_units < 1) throw ContractViolation("n_units must be >= 1");
    const std::vector<int> damaged = state.damaged_components();
    if (damaged.empty()) throw ContractViolation("sample_candidates in a fully repaired state");
    const int m = static_cast<int>(damaged.size());
    const int k = std::min(n_units, m);

    CandidateSet set;
    if (subset_count(m, k) <= static_cast<double>(alpha_tilde)) {
        std::vector<int> idx(static_cast<std::size_t>(k));
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            Candidate c;
            for (int i : idx) c.units.push_back(damaged[static_cast<std::size_t>(i)]);
            set.candidates.push_back(std::move(c));
            int pos = k - 1;
            while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - k + pos) --pos;
            if (pos < 0) break;
            ++idx[static_cast<std::size_t>(pos)];
            for (int j = pos + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
        return set;
    }

    // Partial Fisher-Yates draws a uniform k-subset; RU n goes to its n-th
    // smallest location.
    std::unordered_set<std::vector<int>, SubsetHash> seen;
    std::vector<int> pool = damaged;
    set.candidates.reserve(static_cast<std::size_t>(alpha_tilde));
    while (static_cast<std::int64_t>(set.candidates.size()) < alpha_tilde) {
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> pick(i, m - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        std::vector<int> draw(pool.begin(), pool.begin() + k);
        std::sort(draw.begin(), draw.end());
        if (seen.insert(draw).second) set.candidates.push_back(Candidate{std::move(draw)});
    }
    return set;
}

Eigen::MatrixXd build_design_matrix(const CandidateSet& candidates, std::span<const int> damaged, int n_units) {
    if (n_units < 1) throw ContractViolation("n_units must be >= 1");
    const auto m_count = static_cast<Eigen::Index>(damaged.size());
    std::vector<int> location_of;
    for (std::size_t m = 0; m < damaged.size(); ++m) {
        const int id = damaged[m];
        if (id < 0) throw ContractViolation("negative component id");
        if (static_cast<std::size_t>(id) >= location_of.size()) location_of.resize(static_cast<std::size_t>(id) + 1, -1);
        location_of[static_cast<std::size_t>(id)] = static_cast<int>(m);
    }

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(candidates.size()), m_count * n_units);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& units = candidates.candidates[i].units;
        if (units.size() > static_cast<std::size_t>(n_units)) throw ContractViolation("candidate uses more than N units");
        for (std::size_t n = 0; n < units.size(); ++n) {
            const int id = units[n];
            const int m = (id >= 0 && static_cast<std::size_t>(id) < location_of.size())
                              ? location_of[static_cast<std::size_t>(id)]
                              : -1;
            if (m < 0) throw ContractViolation("candidate assigns an undamaged component " + std::to_string(id));
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m) * n_units + static_cast<Eigen::Index>(n)) = 1.0;
        }
    }
    return H;
}

std::vector<int> sequential_assignment(std::span<const double> theta_hat, int n_locations, int n_units, Sense sense,
                                       std::span<const std::uint8_t> observed) {
    if (n_locations < 0 || n_units < 1) throw ContractViolation("invalid assignment dimensions");
    const auto width = static_cast<std::size_t>(n_units);
    if (theta_hat.size() != static_cast<std::size_t>(n_locations) * width)
        throw ContractViolation("theta length must be M_t * N");
    if (!observed.empty() && observed.size() != theta_hat.size())
        throw ContractViolation("observed mask length must match theta");

    const double blank = sense == Sense::Maximize ? -std::numeric_limits<double>::infinity()
                                                  : std::numeric_limits<double>::infinity();
    std::vector<double> theta(theta_hat.begin(), theta_hat.end());
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(n_locations), 0);
    const int picks = std::min(n_units, n_locations);
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(picks));

    for (int k = 0; k < picks; ++k) {
        std::optional<std::size_t> best;
        for (const bool require_observed : {true, false}) {
            if (observed.empty() && require_observed) continue;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                if (taken[j / width]) continue;
                if (require_observed && !observed[j]) continue;
                if (!best || better(theta[j], theta[*best], sense)) best = j;
            }
            if (best) break;
        }
        const auto m = *best / width;
        chosen.push_back(static_cast<int>(m));
        taken[m] = 1;
        for (std::size_t n = 0; n < width; ++n) theta[m * width + n] = blank;
    }
    return chosen;
}

std::size_t ucb1_select(std::span<const double> means, std::span<const std::int64_t> counts, std::int64_t total) {
    if (means.empty() || means.size() != counts.size()) throw ContractViolation("ucb1_select: mismatched arms");
    if (total < 1) throw ContractViolation("ucb1_select: total count must be >= 1");
    const double log_total = std::log(static_cast<double>(total));
    std::size_t best = 0;
    double best_index = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (counts[i] < 1) throw ContractViolation("ucb1_select: every arm needs at least one sample");
        if (!(means[i] >= 0.0 && means[i] <= 1.0))
            throw ContractViolation("ucb1_select: mean outside [0, 1] (returns not normalized)");
        const double index = means[i] + std::sqrt(2.0 * log_total / static_cast<double>(counts[i]));
        if (index > best_index) {
            best_index = index;
            best = i;
        }
    }
    return best;
}

BeliefModel fit_belief_model(Eigen::MatrixXd design, Eigen::VectorXd y) {
    BeliefModel model;
    const auto solution = solve_min_norm(design, y);
    model.theta_hat = solution.theta;
    model.rank = solution.rank;
    model.y_hat = design * model.theta_hat;
    model.residual_norm = (y - model.y_hat).norm();
    const double centred = (y.array() - y.mean()).matrix().squaredNorm();
    model.r_squared = centred > 0.0 ? 1.0 - model.residual_norm * model.residual_norm / centred : 1.0;
    model.design = std::move(design);
    model.y = std::move(y);
    return model;
}

double ReturnNormalizer::operator()(double raw) const {
    double x;
    if (hi_ > lo_) {
        x = std::clamp((raw - lo_) / (hi_ - lo_), 0.0, 1.0);
    } else {
        x = raw > lo_ ? 1.0 : (raw < lo_ ? 0.0 : 0.5);
    }
    return sense_ == Sense::Minimize ? 1.0 - x : x;
}

Action assign_all_damaged(const State& state) {
    const auto damaged = state.damaged_components();
    return Action::from_targets(state.size(), damaged);
}

Selection uniform_rollout(const Network& net, const State& state, const CandidateSet& candidates,
                          const RandomBasePolicy& base_policy, int beta, const RewardSpec& spec,
                          const RolloutConfig& config, Rng& rng) {
    if (beta < 1) throw ContractViolation("beta must be >= 1");
    if (candidates.size() == 0) throw ContractViolation("uniform_rollout needs at least one candidate");
    check_policy_state(state, base_policy);

    Selection selection;
    selection.candidates = candidates;
    const std::uint64_t round_seed = rng();
    selection.q_means = uniform_means(net, state, candidates, base_policy, beta, spec, config, round_seed);
    selection.counts.assign(candidates.size(), beta);
    selection.simulator_calls = static_cast<std::int64_t>(candidates.size()) * beta;
    const auto best = best_index(selection.q_means, sense_of(spec.objective));
    selection.action = candidates.candidates[best].to_action(state.size());
    return selection;
}

Selection rollout_linear_belief(const Network& net, const State& state, const RandomBasePolicy& base_policy,
                                std::int64_t alpha_tilde, int beta, const RewardSpec& spec,
                                const RolloutConfig& config, Rng& rng) {
    if (beta < 1) throw ContractViolation("beta must be >= 1");
    check_policy_state(state, base_policy);
    const int n_units = base_policy.n_units();
    const auto damaged = state.damaged_components();

    Selection selection;
    if (static_cast<int>(damaged.size()) <= n_units) {
        selection.action = assign_all_damaged(state);
        return selection;
    }
    selection.candidates = sample_candidates(state, n_units, alpha_tilde, rng);
    const std::uint64_t round_seed = rng();
    selection.q_means = uniform_means(net, state, selection.candidates, base_policy, beta, spec, config, round_seed);
    selection.counts.assign(selection.candidates.size(), beta);
    selection.simulator_calls = static_cast<std::int64_t>(selection.candidates.size()) * beta;
    return finish_with_belief(state, damaged, n_units, sense_of(spec.objective), std::move(selection));
}

Selection adaptive_rollout_linear_belief(const Network& net, const State& state, const RandomBasePolicy& base_policy,
                                         std::int64_t alpha_tilde, std::int64_t b_star, const RewardSpec& spec,
                                         const RolloutConfig& config, Rng& rng) {
    if (b_star < 0) throw ContractViolation("b_star must be >= 0");
    check_policy_state(state, base_policy);
    const int n_units = base_policy.n_units();
    const auto damaged = state.damaged_components();

    Selection selection;
    if (static_cast<int>(damaged.size()) <= n_units) {
        selection.action = assign_all_damaged(state);
        return selection;
    }
    selection.candidates = sample_candidates(state, n_units, alpha_tilde, rng);
    const std::uint64_t round_seed = rng();
    const std::size_t arms = selection.candidates.size();

    // Rough estimates: one draw per candidate; these fix the normalization.
    const std::vector<double> rough = uniform_means(net, state, selection.candidates, base_policy, 1, spec, config,
                                                    round_seed);
    const auto [lo, hi] = std::minmax_element(rough.begin(), rough.end());
    const ReturnNormalizer normalize(*lo, *hi, sense_of(spec.objective));

    auto& y = selection.q_means;
    y.resize(arms);
    for (std::size_t i = 0; i < arms; ++i) y[i] = normalize(rough[i]);
    auto& counts = selection.counts;
    counts.assign(arms, 1);
    std::int64_t total = static_cast<std::int64_t>(arms);

    std::vector<Action> actions;
    actions.reserve(arms);
    for (const auto& c : selection.candidates.candidates) actions.push_back(c.to_action(state.size()));
    const PolicyFn policy = base_policy.as_function();

    for (std::int64_t budget = b_star; budget > 0; --budget) {
        const std::size_t tau = ucb1_select(y, counts, total);
        const double sample = normalize(draw_q(net, state, actions[tau], policy, spec, config, round_seed, tau, counts[tau]));
        ++counts[tau];
        ++total;
        y[tau] = (static_cast<double>(counts[tau] - 1) * y[tau] + sample) / static_cast<double>(counts[tau]);
    }
    selection.simulator_calls = total;
    // Normalized means are oriented so that larger is better for either objective.
    return finish_with_belief(state, damaged, n_units, Sense::Maximize, std::move(selection));
}

}  // namespace epnr
