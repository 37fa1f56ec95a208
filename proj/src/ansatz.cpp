#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "covspec/error.hpp"
#include "covspec/format.hpp"
#include "covspec/spectral.hpp"

namespace covspec
{

namespace
{

double position(int n, double alpha)
{
    return 0.5 - alpha / static_cast<double>(n);
}

/// d(ln eps)/dx of the shape at x.
double log_slope(double a, double b, double x)
{
    const double u = 2.0 * x / b;
    const double u4 = u * u * u * u;
    const double d = 1.0 - u4;
    return a * (1.0 + 3.0 * u4) / (d * d);
}

struct Problem
{
    std::vector<double> x;
    std::vector<double> y;
    double max_abs_2x = 0.0;
};

struct Evaluation
{
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian; // columns: a, b, ln eps_mid
    double cost = 0.0;
};

Evaluation evaluate(const Problem &p, const Eigen::Vector3d &theta)
{
    const double a = theta(0);
    const double b = theta(1);
    const auto m = static_cast<Eigen::Index>(p.x.size());
    Evaluation e;
    e.residual.resize(m);
    e.jacobian.resize(m, 3);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const double x = p.x[static_cast<std::size_t>(i)];
        const double u = 2.0 * x / b;
        const double u4 = u * u * u * u;
        const double d = 1.0 - u4;
        const double model = theta(2) + a * x / d;
        e.residual(i) = p.y[static_cast<std::size_t>(i)] - model;
        e.jacobian(i, 0) = x / d;
        e.jacobian(i, 1) = -a * x * 4.0 * u4 / (b * d * d);
        e.jacobian(i, 2) = 1.0;
    }
    e.cost = e.residual.squaredNorm();
    return e;
}

AnsatzFit make_fit(const Eigen::Vector3d &theta, double cost, std::size_t m, int n, RankRange range, int iterations)
{
    AnsatzFit fit;
    fit.a = theta(0);
    fit.b = theta(1);
    fit.log_eps_mid = theta(2);
    fit.eps_mid = std::exp(theta(2));
    fit.rms_residual = std::sqrt(cost / static_cast<double>(m));
    fit.n = n;
    fit.first_rank = range.first;
    fit.last_rank = range.last;
    fit.iterations = iterations;
    return fit;
}

Eigen::Vector3d initial_guess(const Problem &p)
{
    // Regress ln eps on x over the central part of the fitted range.
    const std::size_t m = p.x.size();
    const std::size_t span = std::max<std::size_t>(3, m / 5);
    const std::size_t begin = (m - std::min(span, m)) / 2;
    const std::size_t end = std::min(m, begin + span);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = begin; i < end; ++i)
    {
        sx += p.x[i];
        sy += p.y[i];
        sxx += p.x[i] * p.x[i];
        sxy += p.x[i] * p.y[i];
    }
    const double k = static_cast<double>(end - begin);
    const double denom = k * sxx - sx * sx;
    double slope = denom != 0.0 ? (k * sxy - sx * sy) / denom : 1.0;
    const double intercept = (sy - slope * sx) / k;
    if (!(slope > 0.0))
        slope = 1.0;
    return {slope, std::max(1.2, 1.1 * p.max_abs_2x), intercept};
}

} // namespace

RankRange default_fit_range(int n)
{
    const int trim = n / 10;
    return {trim + 1, n - trim};
}

double ansatz_log_value(double a, double b, double log_eps_mid, int n, double alpha)
{
    const double x = position(n, alpha);
    const double u = 2.0 * x / b;
    return log_eps_mid + a * x / (1.0 - u * u * u * u);
}

double ansatz_value(const AnsatzFit &fit, double alpha)
{
    return std::exp(ansatz_log_value(fit.a, fit.b, fit.log_eps_mid, fit.n, alpha));
}

AnsatzFit fit_ansatz(const std::vector<double> &spectrum, RankRange range, const AnsatzOptions &options)
{
    const int n = static_cast<int>(spectrum.size());
    if (n < 8)
        throw ParameterError("fit_ansatz needs N >= 8, got " + std::to_string(n));
    if (range.first < 1 || range.last > n || range.last - range.first + 1 < 3)
        throw ParameterError("invalid fit range [" + std::to_string(range.first) + ", " + std::to_string(range.last) +
                             "] for N=" + std::to_string(n));

    Problem p;
    for (int alpha = range.first; alpha <= range.last; ++alpha)
    {
        const double v = spectrum[static_cast<std::size_t>(alpha - 1)];
        if (!(v > 0.0) || !std::isfinite(v))
            throw ParameterError("fit range includes rank " + std::to_string(alpha) + " with non-positive value " +
                                 format_double(v));
        const double x = position(n, alpha);
        p.x.push_back(x);
        p.y.push_back(std::log(v));
        p.max_abs_2x = std::max(p.max_abs_2x, std::abs(2.0 * x));
    }
    const double b_min = p.max_abs_2x;

    Eigen::Vector3d theta = initial_guess(p);
    Evaluation current = evaluate(p, theta);
    double damping = 1e-3;
    int iteration = 0;
    bool converged = false;
    for (; iteration < options.max_iterations && !converged; ++iteration)
    {
        const Eigen::Matrix3d jtj = current.jacobian.transpose() * current.jacobian;
        const Eigen::Vector3d gradient = current.jacobian.transpose() * current.residual;
        if (current.cost == 0.0)
        {
            converged = true;
            break;
        }

        bool accepted = false;
        while (!accepted)
        {
            Eigen::Matrix3d lhs = jtj;
            for (int k = 0; k < 3; ++k)
                lhs(k, k) += damping * std::max(jtj(k, k), 1e-12);
            const Eigen::Vector3d step = lhs.ldlt().solve(gradient);
            const Eigen::Vector3d candidate = theta + step;
            const bool small_step = step.norm() <= options.relative_step_tol * (theta.norm() + options.relative_step_tol);

            if (step.allFinite() && candidate(1) > b_min && candidate(0) > 0.0)
            {
                Evaluation trial = evaluate(p, candidate);
                if (trial.cost <= current.cost)
                {
                    theta = candidate;
                    current = std::move(trial);
                    damping = std::max(damping / 3.0, 1e-12);
                    accepted = true;
                    converged = small_step;
                    continue;
                }
            }
            if (small_step)
            {
                // Further damping cannot improve the cost: stationary point.
                converged = true;
                break;
            }
            damping *= 4.0;
            if (damping > 1e20)
                throw ConvergenceError("fit_ansatz: damping exhausted without progress",
                                       make_fit(theta, current.cost, p.x.size(), n, range, iteration));
        }
    }

    AnsatzFit fit = make_fit(theta, current.cost, p.x.size(), n, range, iteration);
    if (!converged)
        throw ConvergenceError("fit_ansatz: no convergence after " + std::to_string(options.max_iterations) +
                                   " iterations (rms residual " + format_double(fit.rms_residual) + ")",
                               fit);
    if (!(fit.b > b_min))
        throw NumericalError("fit_ansatz: b=" + format_double(fit.b) + " violates b > max|2x| = " +
                             format_double(b_min));
    return fit;
}

AnsatzFit fit_ansatz(const std::vector<double> &spectrum)
{
    return fit_ansatz(spectrum, default_fit_range(static_cast<int>(spectrum.size())));
}

AnsatzFit fit_ansatz(const MeanSpectrum &spectrum, std::optional<RankRange> range)
{
    const int n = static_cast<int>(spectrum.values.size());
    const RankRange r = range.value_or(default_fit_range(n));
    std::vector<double> values(spectrum.values.size(), 0.0);
    for (std::size_t a = 0; a < values.size(); ++a)
    {
        const int rank = static_cast<int>(a) + 1;
        if (!spectrum.values[a])
        {
            if (rank >= r.first && rank <= r.last)
                throw ParameterError("fit range includes rank " + std::to_string(rank) +
                                     " which is below the log floor at every date");
            continue;
        }
        values[a] = *spectrum.values[a];
    }
    return fit_ansatz(values, r);
}

DensityOfStates density_of_states_curve(const AnsatzFit &fit, const std::vector<double> &grid)
{
    if (!(fit.a > 0.0) || !(fit.b > 0.0) || fit.n < 1)
        throw ParameterError("density_of_states_curve: invalid fit");
    const double x_hi = position(fit.n, fit.first_rank);
    const double x_lo = position(fit.n, fit.last_rank);
    const auto log_eps = [&](double x) {
        const double u = 2.0 * x / fit.b;
        return fit.log_eps_mid + fit.a * x / (1.0 - u * u * u * u);
    };
    const double y_lo = log_eps(x_lo);
    const double y_hi = log_eps(x_hi);

    DensityOfStates out;
    out.grid = grid;
    out.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        const double eps = grid[i];
        if (!(eps > 0.0))
            continue;
        const double target = std::log(eps);
        if (target < y_lo || target > y_hi)
            continue;
        double x = x_lo;
        if (target == y_hi)
            x = x_hi;
        else if (target != y_lo)
        {
            std::uintmax_t max_iter = 200;
            const auto [left, right] = boost::math::tools::toms748_solve(
                [&](double z) { return log_eps(z) - target; }, x_lo, x_hi, y_lo - target, y_hi - target,
                boost::math::tools::eps_tolerance<double>(52), max_iter);
            x = 0.5 * (left + right);
        }
        // rho = -(1/N) d alpha/d eps and x = 1/2 - alpha/N give rho = 1 / (eps * d ln eps/dx).
        out.values[i] = 1.0 / (eps * log_slope(fit.a, fit.b, x));
    }
    return out;
}

} // namespace covspec
