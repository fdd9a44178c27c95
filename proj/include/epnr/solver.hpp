#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "epnr/common.hpp"
#include "epnr/mdp.hpp"

namespace epnr {

/// Uniformly random min(N, M_t)-subset of the damaged components.
/// Throws ContractViolation in a fully repaired state.
Action random_base_action(const State& state, int n_units, Rng& rng);

/// A uniformly random stationary policy: the assignment for a state is drawn
/// from a stream keyed by (seed, state), so revisiting a state reproduces the
/// same action and distinct states get independent draws.
class RandomBasePolicy {
public:
    RandomBasePolicy(int n_units, std::uint64_t seed);

    Action operator()(const State& state) const;
    int n_units() const noexcept { return n_units_; }
    std::uint64_t seed() const noexcept { return seed_; }
    PolicyFn as_function() const {
        return [policy = *this](const State& s) { return policy(s); };
    }

private:
    int n_units_;
    std::uint64_t seed_;
};

/// One labelled assignment: units[n] is the component repaired by RU n.
struct Candidate {
    std::vector<int> units;

    Action to_action(std::size_t n_components) const { return Action::from_targets(n_components, units); }
};

struct CandidateSet {
    std::vector<Candidate> candidates;

    std::size_t size() const noexcept { return candidates.size(); }
};

/// Binomial coefficient as a double (approximate beyond 2^53).
double subset_count(int m, int k);

/// alpha_tilde distinct random min(N, M_t)-subsets of the damaged set, RU n on
/// the n-th smallest id. If C(M_t, k) <= alpha_tilde, every subset is returned
/// in lexicographic order instead.
CandidateSet sample_candidates(const State& state, int n_units, std::int64_t alpha_tilde, Rng& rng);

/// Binary alpha_tilde x (M_t N) matrix; row i has a one at column m N + n when
/// RU n of candidate i works on the m-th damaged component (ascending ids).
Eigen::MatrixXd build_design_matrix(const CandidateSet& candidates, std::span<const int> damaged, int n_units);

enum class Sense { Maximize, Minimize };

constexpr Sense sense_of(Objective objective) noexcept {
    return objective == Objective::R1 ? Sense::Minimize : Sense::Maximize;
}

/// Picks min(N, M_t) distinct locations one RU at a time: the best remaining
/// (m, n) entry of theta wins (smallest (m, n) on ties) and row m is blanked.
/// `observed`, when given, marks columns that appeared in the design matrix;
/// unobserved entries only compete once no observed entry is left.
/// Returns location indices m in pick order.
std::vector<int> sequential_assignment(std::span<const double> theta_hat, int n_locations, int n_units, Sense sense,
                                       std::span<const std::uint8_t> observed = {});

/// Argmax of mean + sqrt(2 ln(total) / count), lowest index on ties.
/// Throws ContractViolation for counts < 1 or means outside [0, 1].
std::size_t ucb1_select(std::span<const double> means, std::span<const std::int64_t> counts, std::int64_t total);

/// Least-squares fit of the additive model y = H theta (no intercept).
struct BeliefModel {
    Eigen::MatrixXd design;
    Eigen::VectorXd y;
    Eigen::VectorXd theta_hat;
    Eigen::VectorXd y_hat;
    double residual_norm = 0.0;
    double r_squared = 0.0;
    std::size_t rank = 0;
};

BeliefModel fit_belief_model(Eigen::MatrixXd design, Eigen::VectorXd y);

/// Maps raw returns into [0, 1] by min-max over reference values, clamping
/// outliers. For minimized objectives the result is flipped so larger is better.
class ReturnNormalizer {
public:
    ReturnNormalizer(double lo, double hi, Sense sense) : lo_(lo), hi_(hi), sense_(sense) {}
    double operator()(double raw) const;

private:
    double lo_;
    double hi_;
    Sense sense_;
};

struct RolloutConfig {
    int horizon = 10;
    SimMode mode = SimMode::StochasticPlanner;
    int threads = 1;  // candidate-level parallelism for the uniform variants
};

struct Selection {
    Action action;
    CandidateSet candidates;
    std::vector<double> q_means;       // raw means, or normalized means for the adaptive variant
    std::vector<std::int64_t> counts;  // SimQ draws per candidate
    std::optional<BeliefModel> belief;
    std::int64_t simulator_calls = 0;
};

/// Every damaged component is assigned; used when M_t <= N.
Action assign_all_damaged(const State& state);

/// beta SimQ draws per candidate, best mean wins (lowest index on ties).
Selection uniform_rollout(const Network& net, const State& state, const CandidateSet& candidates,
                          const RandomBasePolicy& base_policy, int beta, const RewardSpec& spec,
                          const RolloutConfig& config, Rng& rng);

/// Uniform rollout over alpha_tilde sampled candidates followed by a linear
/// belief fit and sequential RU assignment.
Selection rollout_linear_belief(const Network& net, const State& state, const RandomBasePolicy& base_policy,
                                std::int64_t alpha_tilde, int beta, const RewardSpec& spec,
                                const RolloutConfig& config, Rng& rng);

/// One rough SimQ draw per candidate, then b_star further draws allocated by
/// UCB1 on normalized returns, then the linear belief fit on the running means.
Selection adaptive_rollout_linear_belief(const Network& net, const State& state, const RandomBasePolicy& base_policy,
                                         std::int64_t alpha_tilde, std::int64_t b_star, const RewardSpec& spec,
                                         const RolloutConfig& config, Rng& rng);

}  // namespace epnr
