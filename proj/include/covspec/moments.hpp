#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covspec/kernel.hpp"
#include "covspec/panel.hpp"

namespace covspec
{

enum class MatrixFlavor
{
    Covariance,
    Correlation,
};

std::string_view to_string(MatrixFlavor flavor);

/// Time-indexed sequence of symmetric N x N matrices.
struct CovarianceSeries
{
    MatrixFlavor flavor = MatrixFlavor::Covariance;
    std::vector<std::string> assets;
    std::vector<std::string> dates;
    std::vector<Eigen::MatrixXd> matrices;
    WeightKernel kernel;

    std::size_t size() const { return matrices.size(); }
    Eigen::Index dimension() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

/// Inclusive range of evaluation dates by label; unset ends mean "first
/// feasible" and "last available".
struct DateRange
{
    std::optional<std::string> from;
    std::optional<std::string> to;
};

enum class UpdateMethod
{
    Auto,        // incremental where an exact recursion exists, direct otherwise
    Direct,      // explicit weighted sum at every date
    Incremental, // sliding update; rectangular and exponential kernels only
};

struct RollingOptions
{
    UpdateMethod method = UpdateMethod::Auto;
    unsigned threads = 1;
};

/// Sigma(t) = sum_{i=0}^{L-1} lambda(i) r(t-i) r(t-i)'; returns are not demeaned.
///
/// Every evaluation date needs L returns up to and including itself; the first
/// feasible date is the L-th return date.
CovarianceSeries rolling_covariance(const ReturnPanel &returns, const WeightKernel &kernel,
                                    const DateRange &range = {}, const RollingOptions &options = {});

/// Index-based overload: evaluate at return columns [first, last].
CovarianceSeries rolling_covariance(const ReturnPanel &returns, const WeightKernel &kernel, Eigen::Index first,
                                    Eigen::Index last, const RollingOptions &options = {});

/// rho_ab = Sigma_ab / sqrt(Sigma_aa Sigma_bb). Diagonal entries at or below
/// `variance_floor` raise DegenerateError naming the asset and date.
CovarianceSeries to_correlation(const CovarianceSeries &series, double variance_floor = 1e-16);

Eigen::MatrixXd to_correlation(const Eigen::MatrixXd &covariance, double variance_floor = 1e-16);

/// One file per date: dense lower triangle, row-major, 17 significant digits.
/// Returns the written paths in date order.
std::vector<std::filesystem::path> dump_matrices(const CovarianceSeries &series, const std::filesystem::path &dir,
                                                 const std::string &prefix);

} // namespace covspec
