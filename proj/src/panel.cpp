#include "covspec/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>

#include "covspec/error.hpp"
#include "covspec/format.hpp"

namespace covspec
{

namespace
{

struct RawRow
{
    std::size_t line;
    std::string date;
    std::vector<std::optional<double>> cells;
};

AssetSpec resolve_asset(const std::string &id, const IngestConfig &config)
{
    for (const auto &spec : config.assets)
        if (spec.id == id)
            return spec;
    return AssetSpec{id, AssetClass::LogPrice, 0.04};
}

void validate_assets(const std::vector<AssetSpec> &assets)
{
    std::set<std::string> seen;
    for (const auto &asset : assets)
    {
        if (asset.id.empty())
            throw ParameterError("empty asset id");
        if (!seen.insert(asset.id).second)
            throw ParameterError("duplicate asset id '" + asset.id + "'");
        if (asset.asset_class == AssetClass::InterestRate && !(asset.rate_scale > 0.0))
            throw ParameterError("asset '" + asset.id + "': rate scale must be > 0");
    }
}

} // namespace

std::vector<std::string> ReturnPanel::asset_ids() const
{
    std::vector<std::string> ids;
    ids.reserve(assets.size());
    for (const auto &asset : assets)
        ids.push_back(asset.id);
    return ids;
}

PricePanel parse_panel(std::istream &in, const IngestConfig &config)
{
    validate_assets(config.assets);

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line))
    {
        ++line_no;
        if (!trim(line).empty())
        {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty())
        throw ParseError(line_no, "missing header row");
    if (header.front() != "date")
        throw ParseError(line_no, "first header column must be 'date', got '" + header.front() + "'");
    if (header.size() < 2)
        throw ParseError(line_no, "header has no asset columns");

    PricePanel panel;
    for (std::size_t c = 1; c < header.size(); ++c)
        panel.assets.push_back(resolve_asset(header[c], config));
    validate_assets(panel.assets);
    for (const auto &spec : config.assets)
    {
        const bool present = std::any_of(panel.assets.begin(), panel.assets.end(),
                                         [&](const AssetSpec &a) { return a.id == spec.id; });
        if (!present)
            throw ParseError(line_no, "configured asset '" + spec.id + "' not found in header");
    }

    const std::size_t n_assets = panel.assets.size();
    std::vector<RawRow> rows;
    while (std::getline(in, line))
    {
        ++line_no;
        if (trim(line).empty())
            continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError(line_no, "expected " + std::to_string(header.size()) + " columns, got " +
                                          std::to_string(fields.size()));
        RawRow row{line_no, fields.front(), {}};
        if (row.date.empty())
            throw ParseError(line_no, "empty date");
        row.cells.reserve(n_assets);
        for (std::size_t c = 1; c < fields.size(); ++c)
        {
            if (fields[c].empty() || fields[c] == "NA" || fields[c] == "nan")
            {
                row.cells.emplace_back(std::nullopt);
                continue;
            }
            double value = 0.0;
            if (!parse_double(fields[c], value) || !std::isfinite(value))
                throw ParseError(line_no, "cannot parse value '" + fields[c] + "' for asset '" + header[c] + "'");
            row.cells.emplace_back(value);
        }
        rows.push_back(std::move(row));
    }

    std::stable_sort(rows.begin(), rows.end(), [](const RawRow &a, const RawRow &b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date == rows[i - 1].date)
            throw ParseError(rows[i].line, "duplicate date " + rows[i].date);

    if (rows.size() < 2)
        throw InsufficientDataError("price panel needs at least 2 dates, got " + std::to_string(rows.size()));

    panel.values.resize(static_cast<Eigen::Index>(n_assets), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
    {
        panel.dates.push_back(rows[t].date);
        for (std::size_t a = 0; a < n_assets; ++a)
        {
            const auto &cell = rows[t].cells[a];
            const auto ai = static_cast<Eigen::Index>(a);
            const auto ti = static_cast<Eigen::Index>(t);
            if (cell)
            {
                panel.values(ai, ti) = *cell;
                continue;
            }
            if (config.missing == MissingPolicy::Reject)
                throw ParseError(rows[t].line, "missing value at date " + rows[t].date + ", asset '" +
                                                   panel.assets[a].id + "'");
            if (t == 0)
                throw ParseError(rows[t].line, "cannot forward-fill first date " + rows[t].date + ", asset '" +
                                                   panel.assets[a].id + "'");
            panel.values(ai, ti) = panel.values(ai, ti - 1);
            panel.provenance.push_back({rows[t].date, panel.assets[a].id, "forward-fill"});
        }
    }
    return panel;
}

PricePanel load_panel(const std::filesystem::path &path, const IngestConfig &config)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError(0, "cannot open " + path.string());
    return parse_panel(in, config);
}

PricePanel map_prices(const PricePanel &panel)
{
    if (panel.mapped)
        throw ContractError("panel is already mapped");

    PricePanel out = panel;
    for (Eigen::Index a = 0; a < panel.n_assets(); ++a)
    {
        const auto &asset = panel.assets[static_cast<std::size_t>(a)];
        for (Eigen::Index t = 0; t < panel.n_dates(); ++t)
        {
            const double v = panel.values(a, t);
            const auto &date = panel.dates[static_cast<std::size_t>(t)];
            switch (asset.asset_class)
            {
            case AssetClass::LogPrice:
                if (!(v > 0.0))
                    throw DomainError("non-positive price " + format_double(v) + " for asset '" + asset.id +
                                      "' at " + date);
                out.values(a, t) = std::log(v);
                break;
            case AssetClass::InterestRate:
                if (!(v > -asset.rate_scale))
                    throw DomainError("rate " + format_double(v) + " <= -R0 for asset '" + asset.id + "' at " +
                                      date);
                out.values(a, t) = std::log1p(v / asset.rate_scale);
                break;
            }
        }
    }
    out.mapped = true;
    return out;
}

ReturnPanel compute_returns(const PricePanel &mapped)
{
    if (!mapped.mapped)
        throw ContractError("compute_returns requires a mapped panel");
    if (mapped.n_dates() < 2)
        throw InsufficientDataError("returns need at least 2 dates, got " + std::to_string(mapped.n_dates()));

    ReturnPanel out;
    out.assets = mapped.assets;
    out.dates.assign(mapped.dates.begin() + 1, mapped.dates.end());
    const Eigen::Index steps = mapped.n_dates() - 1;
    out.returns = mapped.values.rightCols(steps) - mapped.values.leftCols(steps);
    return out;
}

PricePanel integrate_returns(const ReturnPanel &returns, const Eigen::VectorXd &x0, const std::string &first_date)
{
    if (x0.size() != returns.n_assets())
        throw ParameterError("x0 has " + std::to_string(x0.size()) + " entries, panel has " +
                             std::to_string(returns.n_assets()) + " assets");
    PricePanel out;
    out.assets = returns.assets;
    out.dates.reserve(returns.dates.size() + 1);
    out.dates.push_back(first_date);
    out.dates.insert(out.dates.end(), returns.dates.begin(), returns.dates.end());
    out.values.resize(returns.n_assets(), returns.n_dates() + 1);
    out.values.col(0) = x0;
    for (Eigen::Index t = 0; t < returns.n_dates(); ++t)
        out.values.col(t + 1) = out.values.col(t) + returns.returns.col(t);
    out.mapped = true;
    return out;
}

double unmap_value(const AssetSpec &asset, double x)
{
    switch (asset.asset_class)
    {
    case AssetClass::LogPrice:
        return std::exp(x);
    case AssetClass::InterestRate:
        return asset.rate_scale * std::expm1(x);
    }
    return x;
}

} // namespace covspec
