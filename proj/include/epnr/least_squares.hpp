#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace epnr {

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kSingularCutoff = 1e-10;

struct MinNormSolution {
    Eigen::VectorXd theta;
    std::size_t rank = 0;
    double sigma_max = 0.0;
};

/// Minimum-Euclidean-norm minimizer of ||y - H theta||_2 via a thin SVD.
/// Throws ContractViolation for shape mismatches or an all-zero H.
MinNormSolution solve_min_norm(const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                               double rel_cutoff = kSingularCutoff);

inline Eigen::VectorXd min_norm_least_squares(const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                                              double rel_cutoff = kSingularCutoff) {
    return solve_min_norm(H, y, rel_cutoff).theta;
}

/// Number of singular values above rel_tol * sigma_max.
std::size_t numerical_rank(const Eigen::MatrixXd& H, double rel_tol = kSingularCutoff);

}  // namespace epnr
