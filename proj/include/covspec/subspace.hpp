#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covspec/moments.hpp"
#include "covspec/spectral.hpp"

namespace covspec
{

/// Orthogonal projector onto the span of the top-k eigenvectors.
struct Projector
{
    int k = 0;
    Eigen::MatrixXd matrix;
    /// Set when eps_k - eps_{k+1} < 1e-10 * eps_1: the subspace is ill-defined at the cut.
    std::optional<std::string> warning;
};

Projector leading_projector(const EigenSystem &eig, int k);

/// Time average of rank-k projectors. Trace k, eigenvalues in [0, 1].
struct MeanProjector
{
    int k = 0;
    Eigen::MatrixXd matrix;
    std::size_t samples = 0;
    std::size_t degenerate_cuts = 0; // dates whose rank cut hit an eigenvalue tie
};

MeanProjector mean_projector(const SpectrumSeries &series, int k, unsigned threads = 1);

/// Descending eigenvalues of the mean projector.
Eigen::VectorXd projector_spectrum(const MeanProjector &mp);

struct FluctuationIndex
{
    double gamma = 0.0;
    double gamma_max = 0.0;
    std::optional<double> ratio; // gamma / gamma_max; undefined when k = N
};

/// gamma = 1 - tr(<P>^2) / k, gamma_max = 1 - k/N.
FluctuationIndex fluctuation_index(const MeanProjector &mp);

/// Per-date rank-k projectors of a series that stores eigenvectors.
std::vector<Eigen::MatrixXd> projector_series(const SpectrumSeries &series, int k, unsigned threads = 1);

/// rho(tau) = tr<(X(t) - <X>)(X(t+tau) - <X>)> / tr<(X - <X>)^2> with <X> the
/// full-sample mean. The lagged average runs over the T - tau available pairs.
std::vector<double> matrix_lagged_correlation(const std::vector<Eigen::MatrixXd> &series, const std::vector<int> &lags);

std::vector<double> matrix_lagged_correlation(const CovarianceSeries &series, const std::vector<int> &lags);

} // namespace covspec
