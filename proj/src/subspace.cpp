#include "covspec/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "covspec/error.hpp"
#include "covspec/format.hpp"
#include "covspec/parallel.hpp"

namespace covspec
{

namespace
{

// Fixed reduction block so that partial sums do not depend on the thread count.
constexpr std::size_t kBlock = 32;

void check_rank(int k, Eigen::Index n)
{
    if (k < 1 || k > n)
        throw ParameterError("projector rank " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
}

std::optional<std::string> cut_warning(const Eigen::VectorXd &values, int k)
{
    if (k >= values.size())
        return std::nullopt;
    const double gap = values(k - 1) - values(k);
    if (gap < 1e-10 * values(0))
        return "eigenvalue tie at rank cut " + std::to_string(k) + " (gap " + format_double(gap) + ")";
    return std::nullopt;
}

Eigen::MatrixXd outer(const Eigen::MatrixXd &vectors, int k)
{
    const auto lead = vectors.leftCols(k);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(vectors.rows(), vectors.rows());
    p.selfadjointView<Eigen::Lower>().rankUpdate(lead);
    p.triangularView<Eigen::StrictlyUpper>() = p.transpose();
    return p;
}

} // namespace

Projector leading_projector(const EigenSystem &eig, int k)
{
    check_rank(k, eig.values.size());
    return {k, outer(eig.vectors, k), cut_warning(eig.values, k)};
}

MeanProjector mean_projector(const SpectrumSeries &series, int k, unsigned threads)
{
    if (!series.has_vectors())
        throw ContractError("mean_projector requires a spectrum series with stored eigenvectors");
    if (series.n_dates() < 1)
        throw ParameterError("mean_projector: empty series");
    const Eigen::Index n = series.dimension();
    check_rank(k, n);

    const auto count = static_cast<std::size_t>(series.n_dates());
    const std::size_t blocks = (count + kBlock - 1) / kBlock;
    std::vector<Eigen::MatrixXd> partial(blocks);
    std::vector<std::size_t> ties(blocks, 0);
    parallel_for(blocks, threads, [&](std::size_t b) {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t t = b * kBlock; t < std::min(count, (b + 1) * kBlock); ++t)
        {
            sum += outer(series.vectors[t], k);
            if (cut_warning(series.values.row(static_cast<Eigen::Index>(t)).transpose(), k))
                ++ties[b];
        }
        partial[b] = std::move(sum);
    });

    MeanProjector mp;
    mp.k = k;
    mp.samples = count;
    mp.matrix = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t b = 0; b < blocks; ++b)
    {
        mp.matrix += partial[b];
        mp.degenerate_cuts += ties[b];
    }
    mp.matrix /= static_cast<double>(count);
    return mp;
}

Eigen::VectorXd projector_spectrum(const MeanProjector &mp)
{
    return eigendecompose(mp.matrix).values;
}

FluctuationIndex fluctuation_index(const MeanProjector &mp)
{
    const auto n = static_cast<double>(mp.matrix.rows());
    FluctuationIndex out;
    // tr(<P>^2) equals the squared Frobenius norm for a symmetric matrix.
    out.gamma = 1.0 - mp.matrix.squaredNorm() / mp.k;
    out.gamma_max = 1.0 - mp.k / n;
    if (out.gamma_max > 0.0)
        out.ratio = out.gamma / out.gamma_max;
    return out;
}

std::vector<Eigen::MatrixXd> projector_series(const SpectrumSeries &series, int k, unsigned threads)
{
    if (!series.has_vectors())
        throw ContractError("projector_series requires a spectrum series with stored eigenvectors");
    check_rank(k, series.dimension());
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(series.n_dates()));
    parallel_for(out.size(), threads, [&](std::size_t t) { out[t] = outer(series.vectors[t], k); });
    return out;
}

std::vector<double> matrix_lagged_correlation(const std::vector<Eigen::MatrixXd> &series, const std::vector<int> &lags)
{
    const auto count = static_cast<int>(series.size());
    if (count < 2)
        throw ParameterError("lagged correlation needs at least 2 matrices, got " + std::to_string(count));
    for (int lag : lags)
        if (lag < 0 || lag >= count)
            throw ParameterError("lag " + std::to_string(lag) + " outside [0, " + std::to_string(count - 1) + "]");

    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(series.front().rows(), series.front().cols());
    for (const auto &m : series)
        mean += m;
    mean /= static_cast<double>(count);

    std::vector<Eigen::MatrixXd> centered;
    centered.reserve(series.size());
    for (const auto &m : series)
        centered.push_back(m - mean);

    // tr(A B) = sum_ij A_ij B_ji
    const auto trace_product = [](const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
        return (a.array() * b.transpose().array()).sum();
    };
    const auto lagged_mean = [&](int lag) {
        double s = 0.0;
        for (int t = 0; t + lag < count; ++t)
            s += trace_product(centered[static_cast<std::size_t>(t)], centered[static_cast<std::size_t>(t + lag)]);
        return s / static_cast<double>(count - lag);
    };

    const double variance = lagged_mean(0);
    const double scale = mean.squaredNorm() + variance;
    if (!(variance > 1e-28 * std::max(scale, 1e-300)))
        throw DegenerateError("lagged correlation of a constant matrix series is undefined");

    std::vector<double> rho;
    rho.reserve(lags.size());
    for (int lag : lags)
        rho.push_back(lag == 0 ? 1.0 : lagged_mean(lag) / variance);
    return rho;
}

std::vector<double> matrix_lagged_correlation(const CovarianceSeries &series, const std::vector<int> &lags)
{
    return matrix_lagged_correlation(series.matrices, lags);
}

} // namespace covspec
