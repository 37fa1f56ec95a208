#include "covspec/moments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "covspec/error.hpp"
#include "covspec/format.hpp"
#include "covspec/parallel.hpp"

namespace covspec
{

namespace
{

void symmetrize_from_lower(Eigen::MatrixXd &m)
{
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
}

Eigen::MatrixXd direct_sum(const Eigen::MatrixXd &returns, const std::vector<double> &weights, Eigen::Index t)
{
    const Eigen::Index n = returns.rows();
    const auto length = static_cast<Eigen::Index>(weights.size());
    // Columns t-L+1..t scaled by sqrt(lambda(t-col)).
    Eigen::MatrixXd scaled(n, length);
    for (Eigen::Index i = 0; i < length; ++i)
        scaled.col(i) = returns.col(t - i) * std::sqrt(weights[static_cast<std::size_t>(i)]);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
    sigma.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    symmetrize_from_lower(sigma);
    return sigma;
}

bool has_recursion(KernelScheme scheme)
{
    return scheme == KernelScheme::Rectangular || scheme == KernelScheme::Exponential;
}

} // namespace

std::string_view to_string(MatrixFlavor flavor)
{
    return flavor == MatrixFlavor::Covariance ? "covariance" : "correlation";
}

CovarianceSeries rolling_covariance(const ReturnPanel &returns, const WeightKernel &kernel, Eigen::Index first,
                                    Eigen::Index last, const RollingOptions &options)
{
    const auto length = static_cast<Eigen::Index>(kernel.weights.size());
    if (length < 1)
        throw ParameterError("empty kernel");
    const Eigen::Index n_dates = returns.n_dates();
    const Eigen::Index first_feasible = length - 1;
    if (first_feasible >= n_dates)
        throw InsufficientDataError("kernel length " + std::to_string(length) + " exceeds the " +
                                    std::to_string(n_dates) + " available return dates");
    if (first < first_feasible)
        throw InsufficientDataError("insufficient history at " + returns.dates[static_cast<std::size_t>(first)] +
                                    "; first feasible date is " +
                                    returns.dates[static_cast<std::size_t>(first_feasible)]);
    if (last >= n_dates || last < first)
        throw ParameterError("invalid evaluation range [" + std::to_string(first) + ", " + std::to_string(last) + "]");

    const bool incremental =
        options.method == UpdateMethod::Incremental ||
        (options.method == UpdateMethod::Auto && has_recursion(kernel.spec.scheme));
    if (options.method == UpdateMethod::Incremental && !has_recursion(kernel.spec.scheme))
        throw ParameterError("incremental update is only available for rectangular and exponential kernels");

    CovarianceSeries series;
    series.flavor = MatrixFlavor::Covariance;
    series.assets = returns.asset_ids();
    series.kernel = kernel;
    const auto count = static_cast<std::size_t>(last - first + 1);
    series.dates.assign(returns.dates.begin() + first, returns.dates.begin() + last + 1);
    series.matrices.resize(count);

    const Eigen::MatrixXd &r = returns.returns;
    if (!incremental)
    {
        parallel_for(count, options.threads, [&](std::size_t k) {
            series.matrices[k] = direct_sum(r, kernel.weights, first + static_cast<Eigen::Index>(k));
        });
        return series;
    }

    // Sliding update: Sigma(t+1) = decay * Sigma(t) + lambda(0) r(t+1)r(t+1)' - decay * lambda(L-1) r(t+1-L)r(t+1-L)'
    // with decay = 1 (rectangular) or mu (exponential).
    const double decay = kernel.spec.scheme == KernelScheme::Exponential ? kernel.spec.mu : 1.0;
    const double head = kernel.weights.front();
    const double tail = decay * kernel.weights.back();
    Eigen::MatrixXd sigma = direct_sum(r, kernel.weights, first);
    series.matrices[0] = sigma;
    for (std::size_t k = 1; k < count; ++k)
    {
        const Eigen::Index t = first + static_cast<Eigen::Index>(k);
        sigma *= decay;
        sigma.selfadjointView<Eigen::Lower>().rankUpdate(r.col(t), head);
        sigma.selfadjointView<Eigen::Lower>().rankUpdate(r.col(t - length), -tail);
        symmetrize_from_lower(sigma);
        series.matrices[k] = sigma;
    }
    return series;
}

CovarianceSeries rolling_covariance(const ReturnPanel &returns, const WeightKernel &kernel, const DateRange &range,
                                    const RollingOptions &options)
{
    const auto find = [&](const std::string &label) -> Eigen::Index {
        const auto it = std::lower_bound(returns.dates.begin(), returns.dates.end(), label);
        if (it == returns.dates.end() || *it != label)
            throw ParameterError("evaluation date " + label + " is not a return date");
        return it - returns.dates.begin();
    };
    const Eigen::Index first = range.from ? find(*range.from) : static_cast<Eigen::Index>(kernel.weights.size()) - 1;
    const Eigen::Index last = range.to ? find(*range.to) : returns.n_dates() - 1;
    if (!range.from && first >= returns.n_dates())
        throw InsufficientDataError("kernel length " + std::to_string(kernel.weights.size()) + " exceeds the " +
                                    std::to_string(returns.n_dates()) + " available return dates");
    return rolling_covariance(returns, kernel, first, last, options);
}

Eigen::MatrixXd to_correlation(const Eigen::MatrixXd &covariance, double variance_floor)
{
    const Eigen::Index n = covariance.rows();
    Eigen::VectorXd inv_sd(n);
    for (Eigen::Index a = 0; a < n; ++a)
    {
        const double v = covariance(a, a);
        if (!(v > variance_floor))
            throw DegenerateError("variance " + format_double(v) + " of asset " + std::to_string(a) +
                                  " is at or below the floor " + format_double(variance_floor));
        inv_sd(a) = 1.0 / std::sqrt(v);
    }
    Eigen::MatrixXd rho = inv_sd.asDiagonal() * covariance * inv_sd.asDiagonal();
    for (Eigen::Index a = 0; a < n; ++a)
    {
        rho(a, a) = 1.0;
        for (Eigen::Index b = 0; b < a; ++b)
        {
            const double v = std::clamp(0.5 * (rho(a, b) + rho(b, a)), -1.0, 1.0);
            rho(a, b) = v;
            rho(b, a) = v;
        }
    }
    return rho;
}

CovarianceSeries to_correlation(const CovarianceSeries &series, double variance_floor)
{
    if (series.flavor != MatrixFlavor::Covariance)
        throw ContractError("to_correlation expects a covariance series");
    CovarianceSeries out = series;
    out.flavor = MatrixFlavor::Correlation;
    for (std::size_t k = 0; k < series.size(); ++k)
    {
        const auto &m = series.matrices[k];
        for (Eigen::Index a = 0; a < m.rows(); ++a)
        {
            if (!(m(a, a) > variance_floor))
            {
                const auto name = static_cast<std::size_t>(a) < series.assets.size()
                                      ? series.assets[static_cast<std::size_t>(a)]
                                      : std::to_string(a);
                throw DegenerateError("degenerate asset '" + name + "' at " + series.dates[k] + ": variance " +
                                      format_double(m(a, a)) + " <= floor " + format_double(variance_floor));
            }
        }
        out.matrices[k] = to_correlation(m, variance_floor);
    }
    return out;
}

std::vector<std::filesystem::path> dump_matrices(const CovarianceSeries &series, const std::filesystem::path &dir,
                                                 const std::string &prefix)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    paths.reserve(series.size());
    for (std::size_t k = 0; k < series.size(); ++k)
    {
        std::string label = series.dates[k];
        std::replace_if(label.begin(), label.end(), [](char c) { return c == '/' || c == '\\' || c == ':'; }, '_');
        const auto path = dir / (prefix + "_" + label + ".csv");
        std::ofstream out(path);
        if (!out)
            throw Error("cannot write " + path.string());
        const auto &m = series.matrices[k];
        for (Eigen::Index i = 0; i < m.rows(); ++i)
        {
            for (Eigen::Index j = 0; j <= i; ++j)
            {
                if (j > 0)
                    out << ',';
                out << format_double(m(i, j));
            }
            out << '\n';
        }
        paths.push_back(path);
    }
    return paths;
}

} // namespace covspec
