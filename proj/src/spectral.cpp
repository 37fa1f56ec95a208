#include "covspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "covspec/error.hpp"
#include "covspec/format.hpp"
#include "covspec/parallel.hpp"

namespace covspec
{

EigenSystem eigendecompose(const Eigen::MatrixXd &matrix, double symmetry_tol)
{
    if (matrix.rows() != matrix.cols())
        throw ContractError("eigendecompose: matrix is " + std::to_string(matrix.rows()) + "x" +
                            std::to_string(matrix.cols()));
    const double norm = matrix.norm();
    const double asym = (matrix - matrix.transpose()).norm();
    if (!(asym <= symmetry_tol * norm))
        throw ContractError("eigendecompose: matrix not symmetric (||A-A'||/||A|| = " +
                            format_double(norm > 0 ? asym / norm : asym) + ")");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
    if (solver.info() != Eigen::Success)
    {
        const auto diag = matrix.diagonal();
        throw NumericalError("eigendecompose: solver did not converge (N=" + std::to_string(matrix.rows()) +
                             ", ||A||_F=" + format_double(norm) + ", max|a_ij|=" +
                             format_double(matrix.cwiseAbs().maxCoeff()) + ", diag range [" +
                             format_double(diag.minCoeff()) + ", " + format_double(diag.maxCoeff()) +
                             "], finite=" + (matrix.allFinite() ? "yes" : "no") + ")");
    }

    const Eigen::Index n = matrix.rows();
    EigenSystem out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index c = 0; c < n; ++c)
    {
        Eigen::Index pivot = 0;
        out.vectors.col(c).cwiseAbs().maxCoeff(&pivot);
        if (out.vectors(pivot, c) < 0.0)
            out.vectors.col(c) *= -1.0;
    }
    return out;
}

SpectrumSeries spectrum_series(const CovarianceSeries &series, bool store_vectors, unsigned threads)
{
    SpectrumSeries out;
    out.flavor = series.flavor;
    out.dates = series.dates;
    const auto count = series.size();
    const Eigen::Index n = series.dimension();
    out.values.resize(static_cast<Eigen::Index>(count), n);
    if (store_vectors)
        out.vectors.resize(count);

    parallel_for(count, threads, [&](std::size_t k) {
        EigenSystem eig;
        try
        {
            eig = eigendecompose(series.matrices[k]);
        }
        catch (const Error &e)
        {
            throw NumericalError(series.dates[k] + ": " + e.what());
        }
        out.values.row(static_cast<Eigen::Index>(k)) = eig.values.transpose();
        if (store_vectors)
            out.vectors[k] = std::move(eig.vectors);
    });
    return out;
}

MeanSpectrum log_mean_spectrum(const SpectrumSeries &series, const LogFloor &floor)
{
    if (series.n_dates() < 1)
        throw ParameterError("log_mean_spectrum: empty series");
    if (!(floor.value > 0.0))
        throw ParameterError("log_mean_spectrum: floor must be > 0");

    const Eigen::Index n = series.dimension();
    std::vector<double> log_sum(static_cast<std::size_t>(n), 0.0);
    MeanSpectrum out;
    out.inclusion_counts.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index t = 0; t < series.n_dates(); ++t)
    {
        const double threshold = floor.relative ? floor.value * std::max(series.values(t, 0), 0.0) : floor.value;
        for (Eigen::Index a = 0; a < n; ++a)
        {
            const double v = series.values(t, a);
            if (v > threshold && v > 0.0)
            {
                log_sum[static_cast<std::size_t>(a)] += std::log(v);
                ++out.inclusion_counts[static_cast<std::size_t>(a)];
            }
        }
    }
    out.values.resize(static_cast<std::size_t>(n));
    for (std::size_t a = 0; a < out.values.size(); ++a)
        if (out.inclusion_counts[a] > 0)
            out.values[a] = std::exp(log_sum[a] / static_cast<double>(out.inclusion_counts[a]));
    return out;
}

// --- Histogram ---------------------------------------------------------------

double DensityHistogram::included_fraction() const
{
    if (total == 0)
        return 0.0;
    return static_cast<double>(total - excluded) / static_cast<double>(total);
}

DensityHistogram &DensityHistogram::merge(const DensityHistogram &other)
{
    if (other.counts.size() != counts.size())
        throw ParameterError("cannot merge histograms with different binning");
    for (std::size_t j = 0; j < counts.size(); ++j)
        counts[j] += other.counts[j];
    excluded += other.excluded;
    total += other.total;
    finalize(*this);
    return *this;
}

namespace
{

void validate_binning(const Binning &binning)
{
    if (binning.bins < 1)
        throw ParameterError("bin count must be >= 1, got " + std::to_string(binning.bins));
    if (!(binning.upper > binning.lower) || !std::isfinite(binning.upper) || !std::isfinite(binning.lower))
        throw ParameterError("bin range [" + format_double(binning.lower) + ", " + format_double(binning.upper) +
                             "] has zero width");
    if (binning.scale == BinScale::Logarithmic && !(binning.lower > 0.0))
        throw ParameterError("logarithmic bins need a positive lower edge, got " + format_double(binning.lower));
}

double edge(const Binning &binning, int j)
{
    if (j == 0)
        return binning.lower;
    if (j == binning.bins)
        return binning.upper;
    const double f = static_cast<double>(j) / binning.bins;
    if (binning.scale == BinScale::Linear)
        return binning.lower + f * (binning.upper - binning.lower);
    return binning.lower * std::pow(binning.upper / binning.lower, f);
}

} // namespace

DensityHistogram make_histogram(const Binning &binning)
{
    validate_binning(binning);
    DensityHistogram hist;
    const auto bins = static_cast<std::size_t>(binning.bins);
    hist.centers.resize(bins);
    hist.widths.resize(bins);
    hist.densities.assign(bins, 0.0);
    hist.counts.assign(bins, 0);
    for (int j = 0; j < binning.bins; ++j)
    {
        const double lo = edge(binning, j);
        const double hi = edge(binning, j + 1);
        const auto k = static_cast<std::size_t>(j);
        hist.widths[k] = hi - lo;
        hist.centers[k] = binning.scale == BinScale::Linear ? 0.5 * (lo + hi) : std::sqrt(lo * hi);
        if (!(hist.widths[k] > 0.0))
            throw ParameterError("bin " + std::to_string(j) + " has zero width");
    }
    return hist;
}

void accumulate(DensityHistogram &hist, const Binning &binning, const Eigen::Ref<const Eigen::VectorXd> &values)
{
    const double span = binning.scale == BinScale::Linear ? binning.upper - binning.lower
                                                          : std::log(binning.upper / binning.lower);
    for (const double v : values)
    {
        ++hist.total;
        if (!(v >= binning.lower && v <= binning.upper))
        {
            ++hist.excluded;
            continue;
        }
        const double pos = binning.scale == BinScale::Linear ? (v - binning.lower) / span
                                                             : std::log(v / binning.lower) / span;
        auto j = static_cast<int>(std::floor(pos * binning.bins));
        j = std::clamp(j, 0, binning.bins - 1);
        // Guard against rounding at interior edges.
        while (j > 0 && v < edge(binning, j))
            --j;
        while (j < binning.bins - 1 && v >= edge(binning, j + 1))
            ++j;
        ++hist.counts[static_cast<std::size_t>(j)];
    }
}

void finalize(DensityHistogram &hist)
{
    for (std::size_t j = 0; j < hist.counts.size(); ++j)
        hist.densities[j] = hist.total == 0 ? 0.0
                                            : static_cast<double>(hist.counts[j]) /
                                                  (static_cast<double>(hist.total) * hist.widths[j]);
}

DensityHistogram spectral_density(const SpectrumSeries &series, const Binning &binning)
{
    if (series.n_dates() == 0 || series.dimension() == 0)
        throw ParameterError("spectral_density: empty series");
    DensityHistogram hist = make_histogram(binning);
    for (Eigen::Index t = 0; t < series.n_dates(); ++t)
        accumulate(hist, binning, series.values.row(t).transpose());
    finalize(hist);
    return hist;
}

Binning default_binning(const SpectrumSeries &series, int bins, std::optional<BinScale> scale)
{
    if (series.n_dates() == 0 || series.dimension() == 0)
        throw ParameterError("default_binning: empty series");
    Binning binning;
    binning.bins = bins;
    const double top = series.values.maxCoeff();
    binning.scale = scale.value_or(series.flavor == MatrixFlavor::Correlation ? BinScale::Linear
                                                                               : BinScale::Logarithmic);
    if (binning.scale == BinScale::Linear)
    {
        // Rank-deficient spectra carry round-off values just below zero.
        binning.lower = std::min(0.0, series.values.minCoeff());
        binning.upper = top > 0.0 ? 1.05 * top : 1.0;
        return binning;
    }

    double bottom = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < series.n_dates(); ++t)
    {
        const double threshold = 1e-12 * series.values(t, 0);
        for (Eigen::Index a = 0; a < series.dimension(); ++a)
        {
            const double v = series.values(t, a);
            if (v > threshold && v > 0.0)
                bottom = std::min(bottom, v);
        }
    }
    if (!std::isfinite(bottom) || !(top > 0.0))
        throw DegenerateError("default_binning: spectrum has no positive eigenvalue");
    binning.lower = bottom / 1.05;
    binning.upper = top * 1.05;
    return binning;
}

// --- Marchenko-Pastur ----------------------------------------------------------

namespace
{

void check_ratio(double q)
{
    if (!(q > 0.0 && q <= 1.0))
        throw ParameterError("Marchenko-Pastur ratio q must be in (0, 1], got " + format_double(q));
}

} // namespace

std::pair<double, double> mp_support(double q)
{
    check_ratio(q);
    const double s = std::sqrt(q);
    return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

double mp_density(double lambda, double q)
{
    const auto [lo, hi] = mp_support(q);
    if (!(lambda > 0.0) || lambda < lo || lambda > hi)
        return 0.0;
    const double shifted = lambda + q - 1.0;
    const double radicand = 4.0 * lambda * q - shifted * shifted;
    if (radicand <= 0.0)
        return 0.0;
    return std::sqrt(radicand) / (2.0 * std::numbers::pi * lambda * q);
}

double mp_ratio(Eigen::Index n_assets, const WeightKernel &kernel)
{
    return static_cast<double>(n_assets) / effective_length(kernel);
}

double fit_mp_ratio(const DensityHistogram &hist)
{
    const auto loss = [&](double q) {
        double s = 0.0;
        for (std::size_t j = 0; j < hist.centers.size(); ++j)
        {
            const double d = hist.densities[j] - mp_density(hist.centers[j], q);
            s += d * d;
        }
        return s;
    };

    // Coarse scan, then Brent refinement inside the best bracket.
    constexpr int grid = 200;
    double best_q = 1.0;
    double best = loss(1.0);
    for (int i = 1; i < grid; ++i)
    {
        const double q = static_cast<double>(i) / grid;
        const double l = loss(q);
        if (l < best)
        {
            best = l;
            best_q = q;
        }
    }
    const double lo = std::max(best_q - 1.0 / grid, 1e-6);
    const double hi = std::min(best_q + 1.0 / grid, 1.0);
    const auto [q, value] = boost::math::tools::brent_find_minima(loss, lo, hi, 40);
    return value <= best ? q : best_q;
}

} // namespace covspec
