#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace covspec
{

enum class AssetClass
{
    LogPrice,
    InterestRate,
};

/// Mapping rule for one asset column.
///
/// Log-price assets map p -> ln(p). Interest-rate assets map a rate R to
/// ln(1 + R/R0); the rate scale R0 decouples the volatility from the rate level.
struct AssetSpec
{
    std::string id;
    AssetClass asset_class = AssetClass::LogPrice;
    double rate_scale = 0.04;
};

enum class MissingPolicy
{
    Reject,
    ForwardFill,
};

/// One line of the ingestion provenance log: `<date>,<asset>,<action>`.
struct ProvenanceEntry
{
    std::string date;
    std::string asset;
    std::string action;
};

/// Ingestion settings. Columns not listed in `assets` default to log-price.
struct IngestConfig
{
    std::vector<AssetSpec> assets;
    MissingPolicy missing = MissingPolicy::Reject;
};

/// Raw (or mapped) daily values, one row per asset and one column per date.
struct PricePanel
{
    std::vector<AssetSpec> assets;
    std::vector<std::string> dates;
    Eigen::MatrixXd values; // N x T
    bool mapped = false;
    std::vector<ProvenanceEntry> provenance;

    Eigen::Index n_assets() const { return values.rows(); }
    Eigen::Index n_dates() const { return values.cols(); }
};

/// Daily returns r(t) = x(t) - x(t-1). Dates carry the later timestamp.
struct ReturnPanel
{
    std::vector<AssetSpec> assets;
    std::vector<std::string> dates;
    Eigen::MatrixXd returns; // N x (T-1)

    Eigen::Index n_assets() const { return returns.rows(); }
    Eigen::Index n_dates() const { return returns.cols(); }
    std::vector<std::string> asset_ids() const;
};

/// Parses a price CSV (`date,<asset ids...>` header, one row per date).
///
/// Rows are sorted by date. Duplicate dates, ragged rows and unparsable cells
/// are rejected with the offending line; empty cells follow `config.missing`.
PricePanel parse_panel(std::istream &in, const IngestConfig &config);
PricePanel load_panel(const std::filesystem::path &path, const IngestConfig &config);

/// Replaces raw values by mapped prices. Throws ContractError if the panel is
/// already mapped and DomainError on values outside the mapping's domain.
PricePanel map_prices(const PricePanel &panel);

/// First differences along time of a mapped panel.
ReturnPanel compute_returns(const PricePanel &mapped);

/// Cumulative sum of returns starting from `x0` (one value per asset).
/// The result is a mapped panel whose first date is `first_date`.
PricePanel integrate_returns(const ReturnPanel &returns, const Eigen::VectorXd &x0, const std::string &first_date);

/// Inverse of the price mapping for one value.
double unmap_value(const AssetSpec &asset, double x);

} // namespace covspec
