#pragma once

// Bound-constrained Levenberg-Marquardt for small dense problems.

#include <Eigen/Dense>

#include <functional>

namespace tlsloss::optim {

/// Fills the residual vector and, when the pointer is non-null, the Jacobian
/// d(residual)/d(parameter). Both are pre-sized by the solver.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& parameters, Eigen::VectorXd& residuals,
                       Eigen::MatrixXd* jacobian)>;

struct LmOptions {
    int max_iterations = 200;
    double relative_cost_tolerance = 1e-12;
    double initial_damping = 1e-3;
    int max_rejected_steps = 40;
};

struct LmResult {
    Eigen::VectorXd parameters;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double sum_of_squares = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimises the sum of squared residuals. Parameters are projected onto
/// [lower, upper] after every step; pass empty vectors for an unbounded fit.
[[nodiscard]] LmResult levenberg_marquardt(const ResidualFunction& residual,
                                           Eigen::Index residual_count,
                                           Eigen::VectorXd initial,
                                           const LmOptions& options = {},
                                           const Eigen::VectorXd& lower = {},
                                           const Eigen::VectorXd& upper = {});

/// (J^T J)^+ scaled by the residual variance. Directions with no information
/// get infinite variance.
[[nodiscard]] Eigen::MatrixXd covariance(const Eigen::MatrixXd& jacobian, double residual_variance);

}  // namespace tlsloss::optim
