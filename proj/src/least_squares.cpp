#include "epnr/least_squares.hpp"

#include "epnr/common.hpp"

namespace epnr {

MinNormSolution solve_min_norm(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, double rel_cutoff) {
    if (H.rows() == 0 || H.cols() == 0) throw ContractViolation("least squares needs a nonempty design matrix");
    if (H.rows() != y.size()) throw ContractViolation("design matrix rows must match the response length");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    MinNormSolution out;
    out.sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
    if (!(out.sigma_max > 0.0)) throw ContractViolation("least squares on an all-zero design matrix");

    const double cutoff = rel_cutoff * out.sigma_max;
    Eigen::VectorXd projected = svd.matrixU().transpose() * y;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) {
            projected(i) /= sigma(i);
            ++out.rank;
        } else {
            projected(i) = 0.0;
        }
    }
    out.theta = svd.matrixV() * projected;
    return out;
}

std::size_t numerical_rank(const Eigen::MatrixXd& H, double rel_tol) {
    if (H.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
    const auto& sigma = svd.singularValues();
    if (sigma.size() == 0 || !(sigma(0) > 0.0)) return 0;
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > rel_tol * sigma(0)) ++rank;
    return rank;
}

}  // namespace epnr
