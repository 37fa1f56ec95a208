#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covspec/error.hpp"
#include "covspec/moments.hpp"

namespace covspec
{

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude component is
/// positive (first such component on ties).
struct EigenSystem
{
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Decomposes a symmetric matrix. Throws ContractError when
/// ||A - A'||_F > symmetry_tol * ||A||_F and NumericalError if the solver fails.
EigenSystem eigendecompose(const Eigen::MatrixXd &matrix, double symmetry_tol = 1e-10);

struct SpectrumSeries
{
    MatrixFlavor flavor = MatrixFlavor::Covariance;
    std::vector<std::string> dates;
    Eigen::MatrixXd values; // T x N, each row descending
    std::vector<Eigen::MatrixXd> vectors; // empty unless requested

    bool has_vectors() const { return !vectors.empty(); }
    Eigen::Index n_dates() const { return values.rows(); }
    Eigen::Index dimension() const { return values.cols(); }
};

SpectrumSeries spectrum_series(const CovarianceSeries &series, bool store_vectors, unsigned threads = 1);

/// Threshold used to drop eigenvalues from logarithmic averages.
/// With `relative` set, the threshold at date t is value * eps_1(t).
struct LogFloor
{
    double value = 1e-12;
    bool relative = true;
};

/// Per-rank geometric mean over the dates where the eigenvalue is above the floor.
struct MeanSpectrum
{
    std::vector<std::optional<double>> values; // nullopt: rank excluded at every date
    std::vector<std::size_t> inclusion_counts;
};

MeanSpectrum log_mean_spectrum(const SpectrumSeries &series, const LogFloor &floor = {});

enum class BinScale
{
    Linear,
    Logarithmic,
};

struct Binning
{
    BinScale scale = BinScale::Linear;
    double lower = 0.0;
    double upper = 1.0;
    int bins = 60;
};

/// Time-averaged eigenvalue density, normalized by N*T so the integral equals
/// the fraction of eigenvalues inside the binned range.
struct DensityHistogram
{
    std::vector<double> centers;
    std::vector<double> widths;
    std::vector<double> densities;
    std::vector<std::uint64_t> counts;
    std::uint64_t excluded = 0;
    std::uint64_t total = 0;

    double included_fraction() const;
    DensityHistogram &merge(const DensityHistogram &other);
};

/// Empty histogram with the edges implied by `binning`.
DensityHistogram make_histogram(const Binning &binning);

/// Adds eigenvalues to the counts of `hist` (densities are not refreshed).
void accumulate(DensityHistogram &hist, const Binning &binning, const Eigen::Ref<const Eigen::VectorXd> &values);

/// Recomputes densities from counts and the total.
void finalize(DensityHistogram &hist);

DensityHistogram spectral_density(const SpectrumSeries &series, const Binning &binning);

/// Linear [min(0, eps_min), 1.05 eps_max] for correlation spectra; logarithmic over the
/// positive spectrum (relative floor 1e-12) for covariance spectra. `scale`
/// overrides the flavor-based choice.
Binning default_binning(const SpectrumSeries &series, int bins = 60, std::optional<BinScale> scale = std::nullopt);

/// Marchenko-Pastur density for ratio q in (0, 1]; zero outside the support.
double mp_density(double lambda, double q);

/// Support [(1 - sqrt q)^2, (1 + sqrt q)^2].
std::pair<double, double> mp_support(double q);

/// q = N / T_eff for a kernel-weighted estimator.
double mp_ratio(Eigen::Index n_assets, const WeightKernel &kernel);

/// Least-squares q fitted to the histogram densities over bins with positive density.
double fit_mp_ratio(const DensityHistogram &hist);

// --- Exponential spectrum shape -------------------------------------------

/// ln eps_alpha = ln eps_mid + a x / (1 - (2x/b)^4), x = 1/2 - alpha/N, alpha = 1..N.
struct AnsatzFit
{
    double a = 0.0;
    double b = 0.0;
    double log_eps_mid = 0.0;
    double eps_mid = 0.0;
    double rms_residual = 0.0;
    int n = 0;          // spectrum size N
    int first_rank = 0; // fitted ranks, 1-based inclusive
    int last_rank = 0;
    int iterations = 0;
};

/// Fitted rank interval (1-based, inclusive).
struct RankRange
{
    int first = 0;
    int last = 0;
};

/// Central 80% of ranks: drops the first and last 10%.
RankRange default_fit_range(int n);

double ansatz_log_value(double a, double b, double log_eps_mid, int n, double alpha);
double ansatz_value(const AnsatzFit &fit, double alpha);

/// Raised when the damped Gauss-Newton iteration does not converge; carries the best iterate.
class ConvergenceError : public NumericalError
{
public:
    ConvergenceError(const std::string &what, AnsatzFit best) : NumericalError(what), best_(best) {}
    const AnsatzFit &best() const noexcept { return best_; }

private:
    AnsatzFit best_;
};

struct AnsatzOptions
{
    int max_iterations = 500;
    double relative_step_tol = 1e-10;
};

/// Levenberg-Marquardt fit of (a, b, ln eps_mid) on the log spectrum over `range`.
///
/// Starts from the central slope, b = max(1.2, 1.1 max|2x|) and the central level; steps that
/// would break a > 0 or b > max|2x| are rejected and the damping increased.
AnsatzFit fit_ansatz(const std::vector<double> &spectrum, RankRange range, const AnsatzOptions &options = {});
AnsatzFit fit_ansatz(const std::vector<double> &spectrum);
AnsatzFit fit_ansatz(const MeanSpectrum &spectrum, std::optional<RankRange> range = std::nullopt);

/// rho(eps) = -(1/N) d alpha / d eps implied by the fitted shape; nullopt where
/// eps falls outside the fitted eigenvalue range.
struct DensityOfStates
{
    std::vector<double> grid;
    std::vector<std::optional<double>> values;
};

DensityOfStates density_of_states_curve(const AnsatzFit &fit, const std::vector<double> &grid);

} // namespace covspec
