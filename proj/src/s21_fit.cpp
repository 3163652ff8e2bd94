#include "tlsloss/s21_fit.hpp"

#include "tlsloss/constants.hpp"
#include "tlsloss/least_squares.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

namespace tlsloss::s21 {
namespace {

constexpr Complex kI{0.0, 1.0};

double wrap_phase(double phi) {
    phi = std::remainder(phi, 2.0 * std::numbers::pi);
    return phi;
}

struct Wings {
    std::size_t left = 0;
    std::size_t right = 0;
};

// Outer 10% of the sweep, split between both ends (left gets the odd one).
Wings wing_sizes(std::size_t n) {
    const auto total = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n)));
    return {total - total / 2, total / 2};
}

// Least-squares slope of unwrapped phase over [first, last).
std::pair<double, std::size_t> wing_phase_slope(const std::vector<double>& f,
                                                const std::vector<Complex>& s,
                                                std::size_t first, std::size_t last) {
    const std::size_t count = last - first;
    if (count < 2) return {0.0, 0};
    std::vector<double> phase(count);
    phase[0] = std::arg(s[first]);
    for (std::size_t k = 1; k < count; ++k) {
        // Unwrap by the phase increment, which is robust to multiple turns.
        phase[k] = phase[k - 1] + std::arg(s[first + k] / s[first + k - 1]);
    }
    double fm = 0.0, pm = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        fm += f[first + k];
        pm += phase[k];
    }
    fm /= static_cast<double>(count);
    pm /= static_cast<double>(count);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double dx = f[first + k] - fm;
        sxy += dx * (phase[k] - pm);
        sxx += dx * dx;
    }
    return {sxx > 0.0 ? sxy / sxx : 0.0, count};
}

std::vector<Complex> remove_delay(const std::vector<double>& f, const std::vector<Complex>& s,
                                  double delay) {
    std::vector<Complex> out(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        out[k] = s[k] * std::polar(1.0, constants::kTwoPi * f[k] * delay);
    }
    return out;
}

// RMS geometric distance to the best algebraic circle, relative to radius.
double circle_misfit(const std::vector<Complex>& points) {
    CircleFit c;
    try {
        c = fit_circle(points);
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
    double sum = 0.0;
    for (const auto& z : points) {
        const double d = std::abs(z - c.center) - c.radius;
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(points.size())) / c.radius;
}

// Off-resonant point of a delay-free trace: the angle about the circle
// centre follows theta0 + 2 atan(2 Q (1 - f/fr)), and the off-resonant
// point sits opposite the resonance at theta0 + pi.
std::optional<Complex> off_resonant_point(const std::vector<double>& f, const std::vector<Complex>& z,
                                          const CircleFit& circle, Complex rough_baseline) {
    const std::size_t n = f.size();
    std::vector<double> theta(n);
    theta[0] = std::arg(z[0] - circle.center);
    for (std::size_t k = 1; k < n; ++k) {
        theta[k] = theta[k - 1] + std::arg((z[k] - circle.center) / (z[k - 1] - circle.center));
    }
    std::size_t res = 0;
    double far = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = std::abs(z[k] - rough_baseline);
        if (d > far) {
            far = d;
            res = k;
        }
    }
    std::size_t lo = res, hi = res;
    while (lo > 0 && std::abs(theta[lo] - theta[res]) < 0.5 * std::numbers::pi) --lo;
    while (hi + 1 < n && std::abs(theta[hi] - theta[res]) < 0.5 * std::numbers::pi) ++hi;
    if (lo == hi) return std::nullopt;
    const double fr0 = f[res];
    const double q_abs = fr0 / std::max(f[hi] - f[lo], f[1] - f[0]);
    const double q0 = theta.back() < theta.front() ? q_abs : -q_abs;

    // Parameters: theta0, ln|Q| with fixed sign, fr relative offset.
    const double sign = q0 > 0.0 ? 1.0 : -1.0;
    const auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const double q = sign * std::exp(x(1));
        const double fr = fr0 * (1.0 + x(2));
        for (std::size_t k = 0; k < n; ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            const double u = 2.0 * q * (1.0 - f[k] / fr);
            r(i) = x(0) + 2.0 * std::atan(u) - theta[k];
            if (jac) {
                const double g = 2.0 / (1.0 + u * u);
                (*jac)(i, 0) = 1.0;
                (*jac)(i, 1) = g * u;
                (*jac)(i, 2) = g * 2.0 * q * f[k] / (fr * fr) * fr0;
            }
        }
    };
    Eigen::VectorXd x0(3);
    x0 << theta[res], std::log(q_abs), 0.0;
    optim::LmOptions lm;
    lm.max_iterations = 200;
    const auto fit = optim::levenberg_marquardt(residual, static_cast<Eigen::Index>(n), x0, lm);
    if (!fit.converged || !fit.parameters.allFinite()) return std::nullopt;
    return circle.center + circle.radius * std::polar(1.0, fit.parameters(0) + std::numbers::pi);
}

}  // namespace

ComplexSweep::ComplexSweep(std::vector<double> frequencies, std::vector<Complex> transmission,
                           double power_watts, double temperature_kelvin)
    : frequencies_(std::move(frequencies)),
      transmission_(std::move(transmission)),
      power_(power_watts),
      temperature_(temperature_kelvin) {
    if (frequencies_.size() != transmission_.size()) {
        throw Error(ErrorKind::InvalidArgument, "sweep frequency/sample length mismatch");
    }
    if (frequencies_.size() < kMinimumSweepLength) {
        throw Error(ErrorKind::InvalidArgument, "sweep needs at least 16 samples");
    }
    for (std::size_t k = 0; k < frequencies_.size(); ++k) {
        if (!std::isfinite(frequencies_[k]) || !std::isfinite(transmission_[k].real()) ||
            !std::isfinite(transmission_[k].imag())) {
            throw Error(ErrorKind::InvalidArgument, "sweep contains non-finite values");
        }
        if (k > 0 && !(frequencies_[k] > frequencies_[k - 1])) {
            throw Error(ErrorKind::InvalidArgument, "sweep frequencies must strictly increase");
        }
    }
}

Complex inverse_s21_model(double frequency, const ResonatorParameters& p) {
    if (!(p.resonance_frequency > 0.0) || !(p.internal_q > 0.0) || !(p.coupling_q > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "f0, Q_i and Q_c must be positive");
    }
    const double y = 2.0 * p.internal_q * (frequency - p.resonance_frequency) / p.resonance_frequency;
    return 1.0 + (p.internal_q / p.coupling_q) * std::polar(1.0, p.mismatch_phase) / (1.0 + kI * y);
}

Complex s21_model(double frequency, const ResonatorParameters& parameters) {
    return 1.0 / inverse_s21_model(frequency, parameters);
}

ComplexSweep apply_environment(const ComplexSweep& sweep, double delay, Complex baseline) {
    const auto& f = sweep.frequencies();
    std::vector<Complex> out(sweep.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = sweep.transmission()[k] * std::polar(1.0, -constants::kTwoPi * f[k] * delay) * baseline;
    }
    return ComplexSweep(f, std::move(out), sweep.power(), sweep.temperature());
}

EnvironmentEstimate estimate_environment(const ComplexSweep& sweep) {
    const auto& f = sweep.frequencies();
    const auto& s = sweep.transmission();
    const std::size_t n = sweep.size();
    const Wings wings = wing_sizes(n);
    if (wings.left + wings.right < 4) {
        throw Error(ErrorKind::InsufficientBaseline,
                    "fewer than 4 off-resonant points for delay/baseline estimation");
    }

    const auto [left_slope, left_count] = wing_phase_slope(f, s, 0, wings.left);
    const auto [right_slope, right_count] = wing_phase_slope(f, s, n - wings.right, n);
    const double slope = (left_slope * static_cast<double>(left_count) +
                          right_slope * static_cast<double>(right_count)) /
                         static_cast<double>(left_count + right_count);
    const double seed = -slope / constants::kTwoPi;

    // The wing slope still contains the resonance's own phase tail; refine
    // by demanding that the de-delayed trace lie on a circle.
    const double span = f.back() - f.front();
    const double half_width = std::max(0.5 * std::abs(seed), 1.0 / (constants::kTwoPi * span));
    // Searched in units of half_width: Brent's stopping rule has an absolute
    // term far larger than a delay in seconds.
    const auto misfit = [&](double u) { return circle_misfit(remove_delay(f, s, seed + half_width * u)); };
    const auto [refined, refined_misfit] =
        boost::math::tools::brent_find_minima(misfit, -1.0, 1.0, std::numeric_limits<double>::digits / 2);
    const double delay = refined_misfit <= misfit(0.0) ? seed + half_width * refined : seed;

    const auto corrected = remove_delay(f, s, delay);
    Complex phasor{0.0, 0.0};
    double magnitude = 0.0;
    std::size_t count = 0;
    auto accumulate = [&](std::size_t k) {
        phasor += corrected[k] / std::abs(corrected[k]);
        magnitude += std::abs(corrected[k]);
        ++count;
    };
    for (std::size_t k = 0; k < wings.left; ++k) accumulate(k);
    for (std::size_t k = n - wings.right; k < n; ++k) accumulate(k);
    Complex baseline = std::polar(magnitude / static_cast<double>(count), std::arg(phasor));

    // The baseline is the off-resonant limit point on the resonance circle.
    try {
        const CircleFit circle = fit_circle(corrected);
        const auto point = off_resonant_point(f, corrected, circle, baseline);
        if (point && std::abs(*point - baseline) < 0.25 * std::abs(baseline)) baseline = *point;
    } catch (const Error&) {
        // flat trace: keep the wing average
    }
    return {delay, baseline};
}

ComplexSweep preprocess_sweep(const ComplexSweep& sweep, std::optional<double> delay,
                              std::optional<Complex> baseline) {
    if (!delay || !baseline) {
        const EnvironmentEstimate estimate = estimate_environment(sweep);
        if (!delay) delay = estimate.delay;
        if (!baseline) {
            // Re-estimate the baseline with the delay actually being removed.
            baseline = *delay == estimate.delay
                           ? estimate.baseline
                           : estimate_environment(apply_environment(sweep, -*delay, 1.0)).baseline;
        }
    }
    if (std::abs(*baseline) == 0.0) throw Error(ErrorKind::InvalidArgument, "zero baseline");
    const auto& f = sweep.frequencies();
    std::vector<Complex> out(sweep.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = sweep.transmission()[k] * std::polar(1.0, constants::kTwoPi * f[k] * *delay) / *baseline;
    }
    return ComplexSweep(f, std::move(out), sweep.power(), sweep.temperature());
}

CircleFit fit_circle(const std::vector<Complex>& points, const std::vector<double>& weights) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 3) throw Error(ErrorKind::FitFailure, "circle fit needs three points");
    const bool weighted = weights.size() == points.size();

    Complex mean{0.0, 0.0};
    double weight_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weighted ? weights[static_cast<std::size_t>(i)] : 1.0;
        mean += w * points[static_cast<std::size_t>(i)];
        weight_sum += w;
    }
    mean /= weight_sum;
    double scale = 0.0;
    for (const auto& z : points) scale = std::max(scale, std::abs(z - mean));
    if (!(scale > 0.0)) throw Error(ErrorKind::FitFailure, "degenerate circle: coincident points");

    // x^2 + y^2 + D x + E y + F = 0 in centred, scaled coordinates.
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex z = (points[static_cast<std::size_t>(i)] - mean) / scale;
        const double w = std::sqrt(weighted ? weights[static_cast<std::size_t>(i)] : 1.0);
        a(i, 0) = w * z.real();
        a(i, 1) = w * z.imag();
        a(i, 2) = w;
        b(i) = -w * std::norm(z);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw Error(ErrorKind::FitFailure, "degenerate circle: collinear points");
    const Eigen::Vector3d coef = qr.solve(b);
    const Complex centre{-coef(0) / 2.0, -coef(1) / 2.0};
    const double r2 = std::norm(centre) - coef(2);
    if (!(r2 > 0.0) || !std::isfinite(r2)) throw Error(ErrorKind::FitFailure, "degenerate circle");
    return {mean + scale * centre, scale * std::sqrt(r2)};
}

ResonatorParameters initial_guess(const ComplexSweep& sweep) {
    const auto& f = sweep.frequencies();
    const auto& s = sweep.transmission();
    const std::size_t n = sweep.size();

    std::vector<double> power(n);
    std::transform(s.begin(), s.end(), power.begin(), [](Complex z) { return std::norm(z); });
    const std::size_t k_min =
        static_cast<std::size_t>(std::min_element(power.begin(), power.end()) - power.begin());

    const Wings wings = wing_sizes(n);
    const std::size_t left = std::max<std::size_t>(wings.left, 1);
    const std::size_t right = std::max<std::size_t>(wings.right, 1);
    double base = 0.0;
    for (std::size_t k = 0; k < left; ++k) base += power[k];
    for (std::size_t k = n - right; k < n; ++k) base += power[k];
    base /= static_cast<double>(left + right);
    const double half = 0.5 * (base + power[k_min]);

    auto crossing = [&](std::size_t inside, std::size_t outside) {
        const double t = (half - power[inside]) / (power[outside] - power[inside]);
        return f[inside] + t * (f[outside] - f[inside]);
    };
    std::optional<double> f_lo, f_hi;
    for (std::size_t k = k_min; k > 0; --k) {
        if (power[k - 1] >= half) {
            f_lo = crossing(k, k - 1);
            break;
        }
    }
    for (std::size_t k = k_min; k + 1 < n; ++k) {
        if (power[k + 1] >= half) {
            f_hi = crossing(k, k + 1);
            break;
        }
    }
    const double f0 = f[k_min];
    const double step = (f.back() - f.front()) / static_cast<double>(n - 1);
    double width;
    if (f_lo && f_hi) {
        width = *f_hi - *f_lo;
    } else if (f_lo) {
        width = 2.0 * (f0 - *f_lo);
    } else if (f_hi) {
        width = 2.0 * (*f_hi - f0);
    } else {
        width = 0.25 * (f.back() - f.front());
    }
    width = std::max(width, step);
    const double loaded_q = f0 / width;

    std::vector<Complex> inverse(n);
    std::vector<double> weights(n);
    for (std::size_t k = 0; k < n; ++k) {
        inverse[k] = 1.0 / s[k];
        weights[k] = power[k];
    }
    CircleFit circle;
    try {
        circle = fit_circle(inverse, weights);
    } catch (const Error& e) {
        throw FitFailure(std::string("no resonance circle: ") + e.what(), {});
    }
    const double ratio = 2.0 * circle.radius;
    const double phi = std::arg(circle.center - 1.0);
    double internal_q = loaded_q * (1.0 + ratio * std::cos(phi));
    if (!(internal_q > 0.0)) internal_q = loaded_q * (1.0 + ratio);

    ResonatorParameters guess;
    guess.resonance_frequency = f0;
    guess.internal_q = internal_q;
    guess.coupling_q = internal_q / ratio;
    guess.mismatch_phase = phi;
    return guess;
}

ResonatorFitResult fit_resonance(const ComplexSweep& sweep, std::optional<ResonatorParameters> guess,
                                 const FitOptions& options) {
    const ResonatorParameters start = guess ? *guess : initial_guess(sweep);
    const auto& f = sweep.frequencies();
    const auto& s = sweep.transmission();
    const std::size_t n = sweep.size();
    const double f_ref = start.resonance_frequency;
    const double span = f.back() - f.front();

    std::vector<Complex> inverse(n);
    std::vector<double> weight(n);
    for (std::size_t k = 0; k < n; ++k) {
        inverse[k] = 1.0 / s[k];
        weight[k] = std::norm(s[k]);
    }

    // Parameters: (f0/f_ref - 1, ln Q_i, ln Q_c, phi).
    const auto residual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const double f0 = f_ref * (1.0 + u(0));
        const double qi = std::exp(u(1));
        const double ratio = std::exp(u(1) - u(2));
        const Complex rotation = std::polar(ratio, u(3));
        for (std::size_t k = 0; k < n; ++k) {
            const double y = 2.0 * qi * (f[k] / f0 - 1.0);
            const Complex denom = 1.0 + kI * y;
            const Complex excess = rotation / denom;  // model - 1
            const Complex misfit = weight[k] * (inverse[k] - 1.0 - excess);
            const auto row = static_cast<Eigen::Index>(2 * k);
            r(row) = misfit.real();
            r(row + 1) = misfit.imag();
            if (jac) {
                const Complex d_f0 = kI * excess / denom * (2.0 * qi * f[k] * f_ref / (f0 * f0));
                const Complex d_qi = excess / denom;
                const Complex d_qc = -excess;
                const Complex d_phi = kI * excess;
                const Complex derivs[4] = {d_f0, d_qi, d_qc, d_phi};
                for (int j = 0; j < 4; ++j) {
                    (*jac)(row, j) = -weight[k] * derivs[j].real();
                    (*jac)(row + 1, j) = -weight[k] * derivs[j].imag();
                }
            }
        }
    };

    Eigen::VectorXd x0(4);
    x0 << 0.0, std::log(start.internal_q), std::log(start.coupling_q), start.mismatch_phase;
    Eigen::VectorXd lower(4), upper(4);
    const double inf = std::numeric_limits<double>::infinity();
    lower << (f.front() - span) / f_ref - 1.0, 0.0, 0.0, -inf;
    upper << (f.back() + span) / f_ref - 1.0, std::log(1e12), std::log(1e12), inf;

    optim::LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.relative_cost_tolerance = options.relative_cost_tolerance;
    const auto count = static_cast<Eigen::Index>(2 * n);
    const optim::LmResult solution = optim::levenberg_marquardt(residual, count, x0, lm, lower, upper);

    ResonatorFitResult result;
    const Eigen::VectorXd& u = solution.parameters;
    result.parameters.resonance_frequency = f_ref * (1.0 + u(0));
    result.parameters.internal_q = std::exp(u(1));
    result.parameters.coupling_q = std::exp(u(2));
    result.parameters.mismatch_phase = wrap_phase(u(3));
    result.iterations = solution.iterations;
    result.converged = solution.converged;

    const double variance = solution.sum_of_squares / static_cast<double>(count - 4);
    const Eigen::MatrixXd cov = optim::covariance(solution.jacobian, variance);
    result.uncertainties.resonance_frequency = f_ref * std::sqrt(cov(0, 0));
    result.uncertainties.internal_q = result.parameters.internal_q * std::sqrt(cov(1, 1));
    result.uncertainties.coupling_q = result.parameters.coupling_q * std::sqrt(cov(2, 2));
    result.uncertainties.mismatch_phase = std::sqrt(cov(3, 3));

    double misfit = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        misfit += std::norm(inverse[k] - inverse_s21_model(f[k], result.parameters));
    }
    result.rms_residual = std::sqrt(misfit / static_cast<double>(n));

    if (!solution.converged) {
        throw FitFailure("resonance fit did not converge in " + std::to_string(options.max_iterations) +
                             " iterations",
                         result);
    }
    const double f0 = result.parameters.resonance_frequency;
    if (f0 < f.front() || f0 > f.back()) {
        throw Error(ErrorKind::OutOfSpan, "fitted resonance lies outside the swept span");
    }
    const double diameter = result.parameters.internal_q / result.parameters.coupling_q;
    if (!(diameter > options.minimum_significance * result.rms_residual)) {
        throw FitFailure("no significant resonance: circle diameter is within the noise", result);
    }
    return result;
}

double photon_number(double power_watts, double resonance_frequency, double internal_q,
                     double coupling_q) {
    if (!(power_watts > 0.0) || !(resonance_frequency > 0.0) || !(internal_q > 0.0) ||
        !(coupling_q > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "photon_number arguments must be positive");
    }
    const double loaded_q = 1.0 / (1.0 / internal_q + 1.0 / coupling_q);
    const double omega = constants::kTwoPi * resonance_frequency;
    return 2.0 * loaded_q * loaded_q * power_watts / (coupling_q * constants::kHbar * omega * omega);
}

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

}  // namespace tlsloss::s21
