#include "tlsloss/tls_model.hpp"

#include "tlsloss/constants.hpp"
#include "tlsloss/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace tlsloss::tls {

void TlsLossCurveParams::validate() const {
    const bool ok = tls_loss_zero >= 0.0 && std::isfinite(tls_loss_zero) &&
                    critical_photon_number > 0.0 && beta > 0.0 && beta <= 1.0 &&
                    high_power_q > 0.0 && angular_frequency > 0.0 && temperature > 0.0;
    if (!ok) throw Error(ErrorKind::InvalidArgument, "invalid TLS loss-curve parameters");
}

double thermal_factor(double angular_frequency, double temperature) {
    if (!(angular_frequency > 0.0) || !(temperature > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "w0 and T must be positive");
    }
    return std::tanh(constants::kHbar * angular_frequency /
                     (2.0 * constants::kBoltzmann * temperature));
}

double tls_loss(double photon_number, const TlsLossCurveParams& params) {
    params.validate();
    if (!(photon_number >= 0.0)) throw Error(ErrorKind::InvalidArgument, "photon number must be >= 0");
    return params.tls_loss_zero * thermal_factor(params.angular_frequency, params.temperature) /
           std::pow(1.0 + photon_number / params.critical_photon_number, params.beta);
}

double total_loss(double photon_number, const TlsLossCurveParams& params) {
    return tls_loss(photon_number, params) + 1.0 / params.high_power_q;
}

namespace {

struct Problem {
    std::vector<double> n;
    std::vector<double> log_loss;
    std::vector<double> weight;  // 1/sigma of log loss
    double thermal = 1.0;
    double scale = 1.0;          // loss scale; A, B are in units of this
    bool fit_nc = true;
    bool fit_beta = false;
    double fixed_beta = 0.5;

    [[nodiscard]] Eigen::Index parameter_count() const { return 2 + (fit_nc ? 1 : 0) + (fit_beta ? 1 : 0); }

    // Layout: A, B, [ln n_c], [beta]
    [[nodiscard]] double nc(const Eigen::VectorXd& x) const { return fit_nc ? std::exp(x(2)) : 1.0; }
    [[nodiscard]] double beta(const Eigen::VectorXd& x) const {
        return fit_beta ? x(parameter_count() - 1) : fixed_beta;
    }

    void operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
        const double a = x(0), b = x(1);
        const double n_c = nc(x);
        const double be = beta(x);
        for (std::size_t k = 0; k < n.size(); ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            const double ratio = n[k] / n_c;
            const double g = std::pow(1.0 + ratio, -be);
            const double tls = a * thermal * g;
            const double model = tls + b;
            r(i) = weight[k] * (std::log(model) - log_loss[k]);
            if (jac) {
                const double w = weight[k] / model;
                (*jac)(i, 0) = w * thermal * g;
                (*jac)(i, 1) = w;
                Eigen::Index col = 2;
                if (fit_nc) (*jac)(i, col++) = w * tls * be * ratio / (1.0 + ratio);
                if (fit_beta) (*jac)(i, col) = -w * tls * std::log1p(ratio);
            }
        }
    }
};

}  // namespace

TlsFitResult fit_power_sweep(std::span<const PowerSweepPoint> points, double angular_frequency,
                             double temperature, const TlsFitOptions& options) {
    if (points.size() < options.minimum_points) {
        throw Error(ErrorKind::InvalidArgument, "power sweep needs at least " +
                                                    std::to_string(options.minimum_points) + " points");
    }
    double n_min = std::numeric_limits<double>::infinity(), n_max = 0.0;
    for (const auto& p : points) {
        if (!(p.loss > 0.0) || !std::isfinite(p.loss)) {
            throw Error(ErrorKind::InvalidArgument, "losses must be positive and finite");
        }
        if (!(p.photon_number >= 0.0) || !std::isfinite(p.photon_number)) {
            throw Error(ErrorKind::InvalidArgument, "photon numbers must be non-negative");
        }
        if (p.photon_number > 0.0) n_min = std::min(n_min, p.photon_number);
        n_max = std::max(n_max, p.photon_number);
    }
    if (!(n_max > 0.0) || std::log10(n_max / n_min) < options.minimum_decades - 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "photon numbers must span at least " +
                                                    std::to_string(options.minimum_decades) +
                                                    " decades");
    }
    if (options.beta_mode == BetaMode::Fixed && !(options.beta > 0.0 && options.beta <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "fixed beta must lie in (0, 1]");
    }

    Problem problem;
    problem.thermal = thermal_factor(angular_frequency, temperature);
    problem.fit_nc = !options.fractional_photon_number;
    problem.fit_beta = options.beta_mode == BetaMode::Free;
    problem.fixed_beta = options.beta;
    const bool weighted = std::all_of(points.begin(), points.end(), [](const PowerSweepPoint& p) {
        return p.loss_sigma > 0.0 && std::isfinite(p.loss_sigma);
    });
    double log_sum = 0.0, loss_min = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        problem.n.push_back(p.photon_number);
        problem.log_loss.push_back(std::log(p.loss));
        // Floor the relative sigma so round-off-level sigmas from noise-free
        // upstream fits do not produce wildly uneven weights.
        problem.weight.push_back(weighted ? 1.0 / std::max(p.loss_sigma / p.loss, 1e-9) : 1.0);
        log_sum += std::log(p.loss);
        loss_min = std::min(loss_min, p.loss);
    }
    const auto m = static_cast<Eigen::Index>(points.size());
    problem.scale = std::exp(log_sum / static_cast<double>(m));
    const double scale = problem.scale;
    for (double& v : problem.log_loss) v -= std::log(scale);

    // Seeds from the shape of the curve: floor below the smallest loss, n_c
    // where the excess has fallen by 1/sqrt(2).
    std::vector<std::size_t> order(points.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return problem.n[i] < problem.n[j]; });
    const double floor0 = 0.5 * loss_min;
    const double excess_first = points[order.front()].loss - floor0;
    double nc0 = n_max;
    for (std::size_t k : order) {
        if (points[k].photon_number > 0.0 && points[k].loss - floor0 < excess_first / std::sqrt(2.0)) {
            nc0 = points[k].photon_number;
            break;
        }
    }
    const double beta0 = options.beta;
    if (!problem.fit_nc) nc0 = 1.0;

    const Eigen::Index p_count = problem.parameter_count();
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd lower(p_count), upper(p_count);
    lower(0) = 0.0;
    upper(0) = inf;
    lower(1) = 1e-12 * loss_min / scale;
    upper(1) = inf;
    if (problem.fit_nc) {
        lower(2) = std::log(n_min * 1e-4);
        upper(2) = std::log(n_max * 1e4);
    }
    if (problem.fit_beta) {
        lower(p_count - 1) = 1e-3;
        upper(p_count - 1) = 1.0;
    }

    optim::LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.relative_cost_tolerance = options.relative_cost_tolerance;

    const std::vector<double> nc_starts =
        problem.fit_nc ? std::vector<double>{nc0, nc0 * 10.0, nc0 / 10.0} : std::vector<double>{1.0};
    std::optional<optim::LmResult> best;
    for (double nc_start : nc_starts) {
        Eigen::VectorXd x0(p_count);
        const double a0 = excess_first * std::pow(1.0 + problem.n[order.front()] / nc_start, beta0) /
                          problem.thermal;
        x0(0) = std::max(a0, 0.0) / scale;
        x0(1) = floor0 / scale;
        if (problem.fit_nc) x0(2) = std::log(nc_start);
        if (problem.fit_beta) x0(p_count - 1) = beta0;
        auto run = optim::levenberg_marquardt(std::cref(problem), m, x0, lm, lower, upper);
        if (!best || (run.converged && !best->converged) ||
            (run.converged == best->converged && run.sum_of_squares < best->sum_of_squares)) {
            best = std::move(run);
        }
    }
    const Eigen::VectorXd& x = best->parameters;

    TlsFitResult result;
    result.params.tls_loss_zero = x(0) * scale;
    result.params.high_power_q = 1.0 / (x(1) * scale);
    result.params.critical_photon_number = problem.nc(x);
    result.params.beta = problem.beta(x);
    result.params.angular_frequency = angular_frequency;
    result.params.temperature = temperature;
    result.iterations = best->iterations;
    result.converged = best->converged;
    result.weighted = weighted;
    result.critical_photon_number_physical = problem.fit_nc;

    const double dof = static_cast<double>(std::max<Eigen::Index>(m - p_count, 1));
    const Eigen::MatrixXd cov = optim::covariance(best->jacobian, best->sum_of_squares / dof);
    result.tls_loss_zero_sigma = scale * std::sqrt(cov(0, 0));
    result.high_power_q_sigma = result.params.high_power_q * std::sqrt(cov(1, 1)) / x(1);
    if (problem.fit_nc) result.critical_photon_number_sigma = result.params.critical_photon_number * std::sqrt(cov(2, 2));
    if (problem.fit_beta) result.beta_sigma = std::sqrt(cov(p_count - 1, p_count - 1));

    double log_misfit = 0.0;
    for (std::size_t k = 0; k < problem.n.size(); ++k) {
        const double model = total_loss(problem.n[k], result.params);
        log_misfit += std::pow(std::log(model / scale) - problem.log_loss[k], 2);
    }
    result.rms_log_residual = std::sqrt(log_misfit / static_cast<double>(m));

    // Does the power dependence carry real information? Compare against the
    // constant-loss model with a nested-model F statistic.
    double weighted_mean = 0.0, weight_total = 0.0;
    for (std::size_t k = 0; k < problem.n.size(); ++k) {
        const double w2 = problem.weight[k] * problem.weight[k];
        weighted_mean += w2 * problem.log_loss[k];
        weight_total += w2;
    }
    weighted_mean /= weight_total;
    double constant_cost = 0.0;
    for (std::size_t k = 0; k < problem.n.size(); ++k) {
        constant_cost += std::pow(problem.weight[k] * (problem.log_loss[k] - weighted_mean), 2);
    }
    const double cost = best->sum_of_squares;
    const double extra = static_cast<double>(p_count - 1);
    const double gain = constant_cost - cost;
    result.tls_detected = result.params.tls_loss_zero > 0.0 && gain > 0.0 &&
                          (cost <= 0.0 || (gain / extra) / (cost / dof) > 10.0);
    // Without a TLS term n_c (and beta) are unidentifiable and the optimiser
    // may wander along that valley. Report the constant-loss model instead;
    // tls_loss_zero_sigma from the full fit is kept as a scale for the bound.
    if (!result.tls_detected) {
        const double constant_dof = static_cast<double>(std::max<Eigen::Index>(m - 1, 1));
        result.params.tls_loss_zero = 0.0;
        result.params.high_power_q = 1.0 / (scale * std::exp(weighted_mean));
        result.high_power_q_sigma = result.params.high_power_q * std::sqrt(constant_cost / constant_dof / weight_total);
        result.critical_photon_number_sigma = std::numeric_limits<double>::infinity();
        double misfit = 0.0;
        for (double v : problem.log_loss) misfit += (v - weighted_mean) * (v - weighted_mean);
        result.rms_log_residual = std::sqrt(misfit / static_cast<double>(m));
        return result;
    }
    if (!result.converged) {
        throw TlsFitFailure("TLS fit did not converge in " + std::to_string(options.max_iterations) +
                                " iterations",
                            result);
    }

    const double n_c = result.params.critical_photon_number;
    std::size_t below = 0, above = 0;
    for (double n : problem.n) {
        if (n <= n_c) ++below;
        if (n >= n_c) ++above;
    }
    if (below < options.minimum_points_per_regime) {
        std::ostringstream msg;
        msg << "low-power regime (n < n_c) is not sampled: only " << below
            << " point(s) below fitted n_c = " << n_c << "; F tan(delta^0) and n_c are degenerate";
        throw Error(ErrorKind::IllConditioned, msg.str());
    }
    if (problem.fit_nc && above < options.minimum_points_per_regime) {
        std::ostringstream msg;
        msg << "high-power regime (n > n_c) is not sampled: only " << above
            << " point(s) above fitted n_c = " << n_c << "; n_c is unconstrained";
        throw Error(ErrorKind::IllConditioned, msg.str());
    }
    return result;
}

}  // namespace tlsloss::tls
