#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "epnr/least_squares.hpp"
#include "epnr/solver.hpp"
#include "../support/oracles.hpp"

using namespace epnr;

namespace {

// substation, transmission, and `leaves` distribution leaves with one cell each
Network star(const std::vector<std::int64_t>& pops) {
    std::vector<Component> comps = {{0, ComponentKind::Substation, std::nullopt},
                                    {1, ComponentKind::TransmissionSegment, 0}};
    std::vector<GridCell> cells;
    for (std::size_t i = 0; i < pops.size(); ++i) {
        const int id = static_cast<int>(comps.size());
        comps.push_back({id, ComponentKind::DistributionSegment, 1});
        cells.push_back({static_cast<int>(i), pops[i], id});
    }
    return Network(comps, cells);
}

State state_with(std::size_t n, const std::map<int, double>& rho) {
    State s;
    s.damage.assign(n, DamageState::Undamaged);
    s.rho.assign(n, 0.0);
    for (auto [l, r] : rho) {
        s.damage[static_cast<std::size_t>(l)] = DamageState::Moderate;
        s.rho[static_cast<std::size_t>(l)] = r;
    }
    return s;
}

State damaged_leaves(const Network& net, int m) {
    std::map<int, double> rho;
    for (int k = 0; k < m; ++k) rho[2 + k] = 1.0 + 0.5 * k;
    return state_with(net.size(), rho);
}

}  // namespace

TEST_CASE("base action when units cover the damage") {
    const Network net = star({10, 10, 10, 10, 10});
    Rng rng(1);
    const State s = damaged_leaves(net, 3);
    const Action a = random_base_action(s, 3, rng);
    CHECK(a.targets() == std::vector<int>{2, 3, 4});
    const State one = state_with(net.size(), {{4, 1.0}});
    CHECK(random_base_action(one, 3, rng).targets() == std::vector<int>{4});
}

TEST_CASE("base action is uniform over subsets") {
    const Network net = star({10, 10, 10, 10, 10});
    const State s = damaged_leaves(net, 5);
    Rng rng(2);
    std::map<std::vector<int>, int> freq;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const Action a = random_base_action(s, 2, rng);
        REQUIRE(is_valid_action(s, a, 2));
        ++freq[a.targets()];
    }
    REQUIRE(freq.size() == 10);
    double chi2 = 0.0;
    for (const auto& [k, c] : freq) {
        CHECK(std::abs(static_cast<double>(c) / n - 0.1) < 0.01);
        chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
    }
    // 9 degrees of freedom, 99.9th percentile 27.88
    CHECK(chi2 < 27.88);
}

TEST_CASE("stationary base policy") {
    const Network net = star({10, 10, 10, 10, 10});
    const RandomBasePolicy policy(2, 99);
    const State s = damaged_leaves(net, 5);
    CHECK(policy(s) == policy(s));
    CHECK(is_valid_action(s, policy(s), 2));
    // distinct states draw independently
    std::set<std::vector<int>> seen;
    for (int k = 0; k < 50; ++k) {
        State t = s;
        t.rho[2] = 1.0 + 0.01 * k;
        seen.insert(policy(t).targets());
    }
    CHECK(seen.size() > 3);
}

TEST_CASE("candidate sampling") {
    const Network net = star(std::vector<std::int64_t>(8, 10));
    Rng rng(3);
    SUBCASE("exhaustion returns every subset") {
        const auto set = sample_candidates(damaged_leaves(net, 4), 2, 10, rng);
        CHECK(set.size() == 6);
        std::set<std::vector<int>> subsets;
        for (const auto& c : set.candidates) {
            auto u = c.units;
            std::sort(u.begin(), u.end());
            subsets.insert(u);
        }
        CHECK(subsets.size() == 6);
    }
    SUBCASE("alpha smaller than the space") {
        const auto set = sample_candidates(damaged_leaves(net, 5), 2, 3, rng);
        CHECK(set.size() == 3);
        std::set<std::vector<int>> subsets;
        for (const auto& c : set.candidates) {
            CHECK(c.units.size() == 2);
            CHECK(std::is_sorted(c.units.begin(), c.units.end()));
            subsets.insert(c.units);
        }
        CHECK(subsets.size() == 3);
    }
    SUBCASE("huge action space") {
        CHECK(subset_count(196, 29) > 1e33);
        CHECK(subset_count(196, 29) < 1e35);
        State s;
        s.damage.assign(327, DamageState::Undamaged);
        s.rho.assign(327, 0.0);
        for (int l = 0; l < 196; ++l) {
            s.damage[static_cast<std::size_t>(l)] = DamageState::Minor;
            s.rho[static_cast<std::size_t>(l)] = 1.0;
        }
        const auto set = sample_candidates(s, 29, 500, rng);
        CHECK(set.size() == 500);
        std::set<std::vector<int>> distinct;
        for (const auto& c : set.candidates) distinct.insert(c.units);
        CHECK(distinct.size() == 500);
    }
}

TEST_CASE("design matrix layout") {
    const std::vector<int> three = {4, 7, 9};
    SUBCASE("single unit gives the identity") {
        CandidateSet set{{{{4}}, {{7}}, {{9}}}};
        CHECK(build_design_matrix(set, three, 1) == Eigen::MatrixXd::Identity(3, 3));
    }
    SUBCASE("unit n sits in column m N + n") {
        const std::vector<int> two = {4, 7};
        CandidateSet set{{{{4, 7}}}};
        const Eigen::MatrixXd H = build_design_matrix(set, two, 2);
        Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(1, 4);
        expected(0, 0) = 1.0;  // m=0, n=0
        expected(0, 3) = 1.0;  // m=1, n=1
        CHECK(H == expected);
    }
    SUBCASE("rank with every ordered assignment") {
        CandidateSet set;
        for (const auto& a : oracle::ordered_assignments(3, 2)) set.candidates.push_back({{three[a[0]], three[a[1]]}});
        CHECK(numerical_rank(build_design_matrix(set, three, 2), 1e-8) == 5);
    }
    SUBCASE("undamaged target is rejected") {
        CandidateSet set{{{{5}}}};
        CHECK_THROWS_AS(build_design_matrix(set, three, 1), ContractViolation);
    }
}

TEST_CASE("sequential assignment") {
    SUBCASE("single unit takes the best location") {
        const std::vector<double> theta = {0.1, 0.4, 0.2, 0.9, 0.3};
        CHECK(sequential_assignment(theta, 5, 1, Sense::Maximize) == std::vector<int>{3});
        CHECK(sequential_assignment(theta, 5, 1, Sense::Minimize) == std::vector<int>{0});
    }
    SUBCASE("a chosen location is never chosen again") {
        // location 1 holds both of the largest entries
        const std::vector<double> theta = {0.1, 0.2, 0.9, 0.8, 0.3, 0.4};
        const auto picks = sequential_assignment(theta, 3, 2, Sense::Maximize);
        CHECK(picks == std::vector<int>{1, 2});
    }
    SUBCASE("uniform shift leaves the choice unchanged") {
        Rng rng(4);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> theta(12);
            for (auto& t : theta) t = u(rng);
            auto shifted = theta;
            for (auto& t : shifted) t += 3.25;
            CHECK(sequential_assignment(theta, 4, 3, Sense::Maximize) ==
                  sequential_assignment(shifted, 4, 3, Sense::Maximize));
            CHECK(sequential_assignment(theta, 4, 3, Sense::Minimize) ==
                  sequential_assignment(shifted, 4, 3, Sense::Minimize));
        }
    }
    SUBCASE("ties go to the smallest index") {
        const std::vector<double> theta = {1.0, 1.0, 1.0, 1.0};
        CHECK(sequential_assignment(theta, 2, 2, Sense::Maximize) == std::vector<int>{0, 1});
    }
    SUBCASE("unobserved entries only fill in") {
        const std::vector<double> theta = {0.5, 0.0, 0.0, 0.7};
        const std::vector<std::uint8_t> observed = {1, 0, 0, 1};
        CHECK(sequential_assignment(theta, 2, 2, Sense::Minimize, observed) == std::vector<int>{0, 1});
        CHECK(sequential_assignment(theta, 2, 2, Sense::Minimize) == std::vector<int>{0, 1});
    }
}

TEST_CASE("ucb1 index") {
    const std::vector<double> means = {0.2, 0.7, 0.4};
    const std::vector<std::int64_t> equal = {5, 5, 5};
    CHECK(ucb1_select(means, equal, 15) == 1);
    const std::vector<double> two = {0.9, 0.1};
    const std::vector<std::int64_t> ones = {1, 1};
    CHECK(ucb1_select(two, ones, 2) == 0);
    // a rarely pulled arm wins through its exploration bonus
    const std::vector<std::int64_t> skewed = {100, 1};
    CHECK(ucb1_select(two, skewed, 101) == 1);
    const std::vector<double> bad = {1.2, 0.1};
    CHECK_THROWS_AS(ucb1_select(bad, ones, 2), ContractViolation);
    const std::vector<std::int64_t> zero = {0, 1};
    CHECK_THROWS_AS(ucb1_select(two, zero, 1), ContractViolation);
}

TEST_CASE("return normalizer") {
    const ReturnNormalizer up(2.0, 4.0, Sense::Maximize);
    CHECK(up(3.0) == 0.5);
    CHECK(up(10.0) == 1.0);
    CHECK(up(0.0) == 0.0);
    const ReturnNormalizer down(2.0, 4.0, Sense::Minimize);
    CHECK(down(2.0) == 1.0);
    const ReturnNormalizer flat(3.0, 3.0, Sense::Maximize);
    CHECK(flat(3.0) == 0.5);
}

TEST_CASE("uniform rollout") {
    const Network net = star({100, 100, 100, 100});
    RewardSpec spec;
    SUBCASE("single candidate is returned") {
        const State s = damaged_leaves(net, 4);
        CandidateSet set{{{{3}}}};
        Rng rng(5);
        const auto sel = uniform_rollout(net, s, set, RandomBasePolicy(1, 1), 3, spec, {}, rng);
        CHECK(sel.action.targets() == std::vector<int>{3});
        CHECK(sel.simulator_calls == 3);
    }
    SUBCASE("deterministic mode matches exhaustive evaluation") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            Rng srng(seed);
            std::uniform_real_distribution<double> u(0.2, 3.0);
            const State s = state_with(net.size(), {{2, u(srng)}, {3, u(srng)}, {4, u(srng)}, {5, u(srng)}});
            const RandomBasePolicy policy(1, seed);
            CandidateSet set;
            std::vector<double> q;
            for (int l : s.damaged_components()) {
                set.candidates.push_back({{l}});
                q.push_back(oracle::rollout_q(net, s, {l}, [&](const State& t) { return policy(t).targets(); }, 10,
                                              spec));
            }
            Rng rng(seed);
            const auto sel = uniform_rollout(net, s, set, policy, 1, spec, {10, SimMode::Deterministic, 1}, rng);
            const auto best = static_cast<std::size_t>(std::min_element(q.begin(), q.end()) - q.begin());
            CHECK(sel.action == set.candidates[best].to_action(net.size()));
            for (std::size_t i = 0; i < q.size(); ++i) CHECK(sel.q_means[i] == doctest::Approx(q[i]).epsilon(1e-12));
        }
    }
    SUBCASE("clearly better candidate wins under noise") {
        // h = 1 and R1: Q is the expected sojourn, 0.1 vs 0.9 days
        const State s = state_with(net.size(), {{2, 0.1}, {3, 0.9}});
        CandidateSet set{{{{3}}, {{2}}}};
        int wins = 0;
        for (std::uint64_t t = 0; t < 100; ++t) {
            Rng rng(t);
            const auto sel = uniform_rollout(net, s, set, RandomBasePolicy(1, t), 200, spec,
                                             {1, SimMode::StochasticPlanner, 1}, rng);
            wins += sel.action.targets() == std::vector<int>{2};
        }
        CHECK(wins >= 99);
    }
}

TEST_CASE("rollout with linear belief") {
    const Network net = star(std::vector<std::int64_t>(8, 100));
    RewardSpec spec;
    SUBCASE("trivial regime assigns everything") {
        const State s = damaged_leaves(net, 3);
        Rng rng(6);
        const auto sel = rollout_linear_belief(net, s, RandomBasePolicy(4, 1), 50, 2, spec, {}, rng);
        CHECK(sel.action.targets() == std::vector<int>{2, 3, 4});
        CHECK(sel.simulator_calls == 0);
        CHECK_FALSE(sel.belief.has_value());
    }
    SUBCASE("valid action and budget accounting") {
        const State s = damaged_leaves(net, 8);
        Rng rng(7);
        const auto sel = rollout_linear_belief(net, s, RandomBasePolicy(3, 1), 40, 5, spec, {}, rng);
        CHECK(is_valid_action(s, sel.action, 3));
        CHECK(sel.candidates.size() == 40);
        CHECK(sel.simulator_calls == 200);
        REQUIRE(sel.belief.has_value());
        CHECK(sel.belief->design.rows() == 40);
        CHECK(sel.belief->design.cols() == 24);
    }
    SUBCASE("thread count does not change the result") {
        const State s = damaged_leaves(net, 8);
        Rng a(8);
        Rng b(8);
        const auto one = rollout_linear_belief(net, s, RandomBasePolicy(3, 1), 40, 5, spec, {10, SimMode::StochasticPlanner, 1}, a);
        const auto four = rollout_linear_belief(net, s, RandomBasePolicy(3, 1), 40, 5, spec, {10, SimMode::StochasticPlanner, 4}, b);
        CHECK(one.action == four.action);
        CHECK(one.q_means == four.q_means);
    }
}

TEST_CASE("adaptive rollout") {
    const Network net = star({300, 50, 200, 10, 120, 80, 40, 400});
    RewardSpec spec;
    spec.objective = Objective::R2;
    const State s = damaged_leaves(net, 8);
    const RandomBasePolicy policy(3, 11);
    SUBCASE("no extra budget is the one-draw linear belief") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng a(seed);
            Rng b(seed);
            const auto adaptive = adaptive_rollout_linear_belief(net, s, policy, 30, 0, spec, {}, a);
            const auto uniform = rollout_linear_belief(net, s, policy, 30, 1, spec, {}, b);
            CHECK(adaptive.action == uniform.action);
            CHECK(adaptive.simulator_calls == uniform.simulator_calls);
        }
    }
    SUBCASE("counts add up to the budget") {
        Rng rng(9);
        const auto sel = adaptive_rollout_linear_belief(net, s, policy, 30, 500, spec, {}, rng);
        const auto total = std::accumulate(sel.counts.begin(), sel.counts.end(), std::int64_t{0});
        CHECK(total == 530);
        CHECK(sel.simulator_calls == 530);
        for (auto c : sel.counts) CHECK(c >= 1);
        for (double y : sel.q_means) {
            CHECK(y >= 0.0);
            CHECK(y <= 1.0);
        }
        CHECK(is_valid_action(s, sel.action, 3));
    }
    SUBCASE("draws concentrate on promising candidates") {
        Rng rng(10);
        const auto sel = adaptive_rollout_linear_belief(net, s, policy, 30, 3000, spec, {}, rng);
        const auto most = static_cast<std::size_t>(std::max_element(sel.counts.begin(), sel.counts.end()) - sel.counts.begin());
        auto sorted = sel.q_means;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        CHECK(sel.q_means[most] >= sorted[5]);
        CHECK(sel.counts[most] > 3000 / 30);
    }
}
