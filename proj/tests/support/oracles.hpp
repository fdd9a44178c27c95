#pragma once

// Reference computations written against the model definition only; they do
// not call the library's transition, reward or least-squares code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "epnr/mdp.hpp"
#include "epnr/network.hpp"

namespace oracle {

// Persons served when `damaged[c]` marks broken components: walk each cell's
// leaf up to the root.
inline std::int64_t served(const epnr::Network& net, const std::vector<bool>& damaged) {
    std::int64_t total = 0;
    for (const auto& cell : net.cells()) {
        bool ok = true;
        std::optional<int> c = cell.serving_leaf;
        while (c && ok) {
            ok = !damaged[static_cast<std::size_t>(*c)];
            c = net.component(*c).parent;
        }
        if (ok) total += cell.population;
    }
    return total;
}

struct DetState {
    std::vector<bool> damaged;
    std::vector<double> rho;
};

inline DetState from_state(const epnr::State& s) {
    DetState d;
    for (std::size_t l = 0; l < s.size(); ++l) {
        d.damaged.push_back(s.damage[l] != epnr::DamageState::Undamaged);
        d.rho.push_back(s.rho[l]);
    }
    return d;
}

// Deterministic race: the smallest remaining time among assigned components
// elapses; everything reaching zero is repaired.
inline double det_step(DetState& s, const std::vector<int>& assigned) {
    double r = INFINITY;
    for (int l : assigned) r = std::min(r, s.rho[static_cast<std::size_t>(l)]);
    for (int l : assigned) {
        auto& rho = s.rho[static_cast<std::size_t>(l)];
        rho -= r;
        if (rho <= 0.0) {
            rho = 0.0;
            s.damaged[static_cast<std::size_t>(l)] = false;
        }
    }
    return r;
}

inline double goal_persons(const epnr::RewardSpec& spec, const epnr::Network& net) {
    const double p = static_cast<double>(net.total_population());
    return spec.objective == epnr::Objective::R1 ? std::ceil(spec.zeta * p - 1e-9) : p;
}

inline double unit_reward(const epnr::RewardSpec& spec, double served_after, double r, double p) {
    double v = spec.objective == epnr::Objective::R1 ? r : served_after * r;
    if (spec.unit_days > 0.0)
        v = std::min(spec.objective == epnr::Objective::R1 ? v / spec.unit_days : v / (p * spec.unit_days), 1.0);
    return v;
}

// h-step discounted return of `first` followed by `policy`, evaluated exactly
// in the deterministic model. The policy sees library State objects rebuilt
// from the oracle state.
inline double rollout_q(const epnr::Network& net, const epnr::State& start, const std::vector<int>& first,
                        const std::function<std::vector<int>(const epnr::State&)>& policy, int h,
                        const epnr::RewardSpec& spec) {
    DetState s = from_state(start);
    const double p = static_cast<double>(net.total_population());
    const double goal = goal_persons(spec, net);
    auto as_state = [&] {
        epnr::State st = start;
        for (std::size_t l = 0; l < st.size(); ++l) {
            st.rho[l] = s.rho[l];
            if (!s.damaged[l]) st.damage[l] = epnr::DamageState::Undamaged;
        }
        return st;
    };
    double total = 0.0;
    double discount = 1.0;
    std::vector<int> action = first;
    for (int k = 0; k < h; ++k) {
        const double r = det_step(s, action);
        const double n = static_cast<double>(served(net, s.damaged));
        total += discount * unit_reward(spec, n, r, p);
        const bool done = std::none_of(s.damaged.begin(), s.damaged.end(), [](bool b) { return b; });
        if (n >= goal || done) break;
        discount *= spec.gamma;
        action = policy(as_state());
    }
    return total;
}

// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        out.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

// All injective maps from k labelled units to n locations.
inline std::vector<std::vector<int>> ordered_assignments(int n, int k) {
    std::vector<std::vector<int>> out;
    for (auto s : subsets(n, k)) {
        std::sort(s.begin(), s.end());
        do out.push_back(s);
        while (std::next_permutation(s.begin(), s.end()));
    }
    return out;
}

// Pseudo-inverse through the eigen-decomposition of H^T H; eigenvalues below
// rel_tol * max are dropped.
inline Eigen::MatrixXd pinv_normal(const Eigen::MatrixXd& H, double rel_tol) {
    const Eigen::MatrixXd G = H.transpose() * H;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double cut = rel_tol * lam.maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (lam[i] > cut) inv[i] = 1.0 / lam[i];
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * H.transpose();
}

// Pseudo-inverse solution through a complete orthogonal decomposition.
inline Eigen::VectorXd cod_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, double rel_tol) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(H);
    cod.setThreshold(rel_tol);
    return cod.solve(y);
}

// 8 sum ln n / gap + (1 + pi^2/3) sum gap, over suboptimal arms.
inline double ucb1_regret_bound(const std::vector<double>& gaps, double n) {
    double a = 0.0;
    double b = 0.0;
    for (double g : gaps) {
        if (g <= 0.0) continue;
        a += 8.0 * std::log(n) / g;
        b += g;
    }
    return a + (1.0 + M_PI * M_PI / 3.0) * b;
}

}  // namespace oracle
