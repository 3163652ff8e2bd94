#include "tlsloss/least_squares.hpp"

#include <cmath>
#include <limits>

namespace tlsloss::optim {
namespace {

void project(Eigen::VectorXd& x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    if (lower.size() == x.size()) x = x.cwiseMax(lower);
    if (upper.size() == x.size()) x = x.cwiseMin(upper);
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFunction& residual, Eigen::Index residual_count,
                             Eigen::VectorXd initial, const LmOptions& options,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    const Eigen::Index p = initial.size();
    LmResult out;
    project(initial, lower, upper);
    out.parameters = initial;
    out.residuals.resize(residual_count);
    out.jacobian.resize(residual_count, p);
    residual(out.parameters, out.residuals, &out.jacobian);
    out.sum_of_squares = out.residuals.squaredNorm();

    double damping = options.initial_damping;
    Eigen::VectorXd trial_residuals(residual_count);
    Eigen::MatrixXd trial_jacobian(residual_count, p);

    for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
        if (out.sum_of_squares == 0.0) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
        const Eigen::VectorXd gradient = out.jacobian.transpose() * out.residuals;
        Eigen::VectorXd scale = jtj.diagonal();
        const double scale_floor = std::max(scale.maxCoeff(), 1.0) * 1e-15;
        scale = scale.cwiseMax(scale_floor);

        bool accepted = false;
        bool stalled = false;
        for (int rejected = 0; rejected < options.max_rejected_steps; ++rejected) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += damping * scale;
            const Eigen::VectorXd step = a.ldlt().solve(-gradient);
            Eigen::VectorXd trial = out.parameters + step;
            project(trial, lower, upper);
            if ((trial - out.parameters).cwiseAbs().maxCoeff() == 0.0) {
                stalled = true;
                break;
            }
            residual(trial, trial_residuals, &trial_jacobian);
            const double trial_cost = trial_residuals.squaredNorm();
            if (std::isfinite(trial_cost) && trial_cost < out.sum_of_squares) {
                const double decrease = out.sum_of_squares - trial_cost;
                const bool small = decrease <= options.relative_cost_tolerance * out.sum_of_squares;
                out.parameters = trial;
                out.residuals = trial_residuals;
                out.jacobian = trial_jacobian;
                out.sum_of_squares = trial_cost;
                damping = std::max(damping / 3.0, 1e-12);
                accepted = true;
                if (small) out.converged = true;
                break;
            }
            damping *= 4.0;
        }
        // No downhill step exists at machine precision: a stationary point.
        if (!accepted || stalled) {
            out.converged = true;
            break;
        }
        if (out.converged) {
            ++out.iterations;
            break;
        }
    }
    return out;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& jacobian, double residual_variance) {
    const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    const Eigen::Index p = jtj.rows();
    // Scale to unit diagonal so the rank test is not fooled by units.
    Eigen::VectorXd d = jtj.diagonal().cwiseMax(0.0).cwiseSqrt();
    Eigen::VectorXd inv_d(p);
    for (Eigen::Index i = 0; i < p; ++i) inv_d(i) = d(i) > 0.0 ? 1.0 / d(i) : 0.0;
    const Eigen::MatrixXd scaled = inv_d.asDiagonal() * jtj * inv_d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    const Eigen::VectorXd values = eig.eigenvalues();
    const Eigen::MatrixXd vectors = eig.eigenvectors();
    const double cutoff = std::max(values.maxCoeff(), 0.0) * 1e-13;

    Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd null_weight = Eigen::VectorXd::Zero(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        if (values(k) > cutoff) {
            pinv += vectors.col(k) * vectors.col(k).transpose() / values(k);
        } else {
            null_weight += vectors.col(k).cwiseAbs2();
        }
    }
    Eigen::MatrixXd cov = inv_d.asDiagonal() * pinv * inv_d.asDiagonal();
    cov *= residual_variance;
    const double inf = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p; ++i) {
        if (d(i) == 0.0 || null_weight(i) > 1e-12) cov(i, i) = inf;
    }
    return cov;
}

}  // namespace tlsloss::optim
