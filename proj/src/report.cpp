#include "covspec/report.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "covspec/ensembles.hpp"
#include "covspec/format.hpp"
#include "covspec/kernel.hpp"
#include "covspec/moments.hpp"
#include "covspec/panel.hpp"
#include "covspec/spectral.hpp"
#include "covspec/subspace.hpp"

namespace covspec
{

using ordered_json = nlohmann::ordered_json;

std::string sha256_hex(const std::filesystem::path &file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error("cannot read " + file.string());
    EVP_MD_CTX *ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buffer[1 << 15];
    while (in)
    {
        in.read(buffer, sizeof(buffer));
        EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    static const char *hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i)
    {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace
{

/// Tracks every file written into the bundle directory.
class BundleWriter
{
public:
    BundleWriter(std::filesystem::path dir, OutputFormat format) : dir_(std::move(dir)), format_(format)
    {
        std::filesystem::create_directories(dir_);
        // A stale manifest must never describe this run's outputs.
        std::filesystem::remove(dir_ / "manifest.json");
    }

    void table(const Table &t)
    {
        if (format_ == OutputFormat::Csv)
        {
            std::ostringstream out;
            for (std::size_t c = 0; c < t.columns.size(); ++c)
                out << (c ? "," : "") << t.columns[c];
            out << '\n';
            for (const auto &row : t.rows)
            {
                for (std::size_t c = 0; c < row.size(); ++c)
                    out << (c ? "," : "") << csv_cell(row[c]);
                out << '\n';
            }
            text(t.stem + ".csv", out.str());
            return;
        }
        ordered_json rows = ordered_json::array();
        for (const auto &row : t.rows)
        {
            ordered_json obj = ordered_json::object();
            for (std::size_t c = 0; c < row.size(); ++c)
                obj[t.columns[c]] = json_cell(row[c]);
            rows.push_back(std::move(obj));
        }
        text(t.stem + ".json", rows.dump(1) + "\n");
    }

    void json(const std::string &name, const ordered_json &value) { text(name, value.dump(2) + "\n"); }

    void text(const std::string &name, const std::string &content)
    {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error("cannot write " + path.string());
        out << content;
        out.close();
        if (!out)
            throw Error("failed writing " + path.string());
        written_.push_back(name);
    }

    /// Registers a file written by someone else (e.g. matrix dumps).
    void adopt(const std::filesystem::path &path)
    {
        written_.push_back(std::filesystem::relative(path, dir_).generic_string());
    }

    ReportBundle complete(const ordered_json &config, const ordered_json &summary)
    {
        ReportBundle bundle;
        bundle.directory = dir_;
        std::sort(written_.begin(), written_.end());
        ordered_json files = ordered_json::array();
        for (const auto &name : written_)
        {
            const auto path = dir_ / name;
            EmittedFile f{name, sha256_hex(path), std::filesystem::file_size(path)};
            files.push_back({{"path", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
            bundle.files.push_back(std::move(f));
        }
        ordered_json manifest;
        manifest["status"] = "complete";
        manifest["config"] = config;
        manifest["files"] = std::move(files);
        manifest["summary"] = summary;
        write_manifest(manifest);
        bundle.manifest = dir_ / "manifest.json";
        return bundle;
    }

    void abort(const ordered_json &config, const AnalysisError &error) noexcept
    {
        try
        {
            for (const auto &name : written_)
                std::filesystem::remove(dir_ / name);
            std::filesystem::remove_all(dir_ / "matrices");
            ordered_json manifest;
            manifest["status"] = "incomplete";
            manifest["config"] = config;
            manifest["files"] = ordered_json::array();
            manifest["error"] = {{"module", error.module()}, {"message", error.what()}};
            write_manifest(manifest);
        }
        catch (...)
        {
            spdlog::error("could not write incomplete manifest in {}", dir_.string());
        }
    }

private:
    static std::string csv_cell(const Table::Cell &cell)
    {
        if (const auto *d = std::get_if<double>(&cell))
            return format_double(*d);
        if (const auto *i = std::get_if<std::int64_t>(&cell))
            return std::to_string(*i);
        if (const auto *s = std::get_if<std::string>(&cell))
            return *s;
        return {};
    }

    static ordered_json json_cell(const Table::Cell &cell)
    {
        if (const auto *d = std::get_if<double>(&cell))
            return std::isfinite(*d) ? ordered_json(*d) : ordered_json(format_double(*d));
        if (const auto *i = std::get_if<std::int64_t>(&cell))
            return *i;
        if (const auto *s = std::get_if<std::string>(&cell))
            return *s;
        return nullptr;
    }

    void write_manifest(const ordered_json &manifest)
    {
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << '\n';
    }

    std::filesystem::path dir_;
    OutputFormat format_;
    std::vector<std::string> written_;
};

template <class F>
auto stage(const char *module, F &&body)
{
    try
    {
        return body();
    }
    catch (const AnalysisError &)
    {
        throw;
    }
    catch (const std::exception &e)
    {
        throw AnalysisError(module, e.what());
    }
}

/// Recorded config: execution settings (output directory, thread count) do
/// not influence results and are left out so manifests compare equal.
ordered_json recorded_config(const RunConfig &config)
{
    ordered_json out = ordered_json::object();
    for (const auto &[key, value] : to_key_values(config))
        if (key != "output.dir" && key != "run.threads" && key != "synth.output")
            out[key] = value;
    return out;
}

Table spectrum_table(const std::string &stem, const SpectrumSeries &spectra)
{
    Table t{stem, {"date"}, {}};
    for (Eigen::Index a = 0; a < spectra.dimension(); ++a)
        t.columns.push_back("eps_" + std::to_string(a + 1));
    for (Eigen::Index d = 0; d < spectra.n_dates(); ++d)
    {
        std::vector<Table::Cell> row{spectra.dates[static_cast<std::size_t>(d)]};
        for (Eigen::Index a = 0; a < spectra.dimension(); ++a)
            row.emplace_back(spectra.values(d, a));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table mean_spectrum_table(const MeanSpectrum &mean)
{
    Table t{"mean_spectrum", {"rank", "value", "inclusion_count"}, {}};
    for (std::size_t a = 0; a < mean.values.size(); ++a)
    {
        Table::Cell value;
        if (mean.values[a])
            value = *mean.values[a];
        t.rows.push_back({static_cast<std::int64_t>(a + 1), value,
                          static_cast<std::int64_t>(mean.inclusion_counts[a])});
    }
    return t;
}

ReturnPanel load_returns(const RunConfig &config, ordered_json &summary, BundleWriter &writer)
{
    if (config.ensemble)
        return generate_returns(*config.ensemble, config.threads);
    const PricePanel raw = load_panel(*config.input_path, config.ingest);
    if (!raw.provenance.empty())
    {
        std::ostringstream log;
        write_provenance(log, raw.provenance);
        writer.text("provenance.log", log.str());
        spdlog::warn("{} missing values forward-filled", raw.provenance.size());
    }
    summary["forward_filled"] = raw.provenance.size();
    return compute_returns(map_prices(raw));
}

} // namespace

ReportBundle run_analysis(const RunConfig &config)
{
    const ordered_json recorded = recorded_config(config);
    BundleWriter writer(config.output_dir, config.format);
    ordered_json summary = ordered_json::object();
    const unsigned threads = config.threads;
    const auto &analyses = config.analyses;

    try
    {
        const ReturnPanel returns = stage("panel-ingest", [&] { return load_returns(config, summary, writer); });
        const Eigen::Index n = returns.n_assets();
        summary["n_assets"] = n;
        summary["n_return_dates"] = returns.n_dates();
        spdlog::info("panel: {} assets, {} return dates", n, returns.n_dates());

        stage("cli", [&] {
            for (int k : analyses.projector_ranks)
                if (k < 1 || k > n)
                    throw ParameterError("projector rank " + std::to_string(k) + " outside [1, " +
                                         std::to_string(n) + "]");
            return 0;
        });

        const WeightKernel kernel = stage("kernel", [&] { return build_kernel(config.kernel); });
        for (const auto &w : kernel.warnings)
            spdlog::warn("{}", w);
        summary["kernel"] = {{"scheme", to_string(kernel.spec.scheme)},
                             {"length", kernel.length()},
                             {"effective_length", effective_length(kernel)},
                             {"warnings", kernel.warnings}};

        const bool need_main = analyses.spectrum || analyses.density || analyses.ansatz ||
                               !analyses.projector_ranks.empty() || analyses.mp_compare || config.dump_matrices;
        CovarianceSeries covariance;
        CovarianceSeries series;
        if (need_main)
        {
            covariance = stage("moments", [&] {
                return rolling_covariance(returns, kernel, config.eval, {UpdateMethod::Auto, threads});
            });
            series = config.flavor == MatrixFlavor::Correlation ? stage("moments", [&] { return to_correlation(covariance); })
                                                                : covariance;
            summary["evaluation_dates"] = series.size();
            spdlog::info("{} {} matrices from {} to {}", series.size(), to_string(series.flavor),
                         series.dates.front(), series.dates.back());
            if (config.dump_matrices)
                for (const auto &path :
                     stage("moments", [&] { return dump_matrices(series, config.output_dir / "matrices",
                                                                 std::string(to_string(series.flavor))); }))
                    writer.adopt(path);
        }

        const bool need_spectra =
            analyses.spectrum || analyses.density || analyses.ansatz || !analyses.projector_ranks.empty();
        SpectrumSeries spectra;
        if (need_spectra)
            spectra = stage("spectral", [&] {
                return spectrum_series(series, !analyses.projector_ranks.empty(), threads);
            });

        if (analyses.spectrum || analyses.ansatz)
        {
            stage("spectral", [&] {
                if (analyses.spectrum)
                    writer.table(spectrum_table("spectrum", spectra));
                const MeanSpectrum mean = log_mean_spectrum(spectra);
                writer.table(mean_spectrum_table(mean));
                if (!analyses.ansatz)
                    return 0;
                const AnsatzFit fit = fit_ansatz(mean, config.ansatz_range);
                ordered_json j;
                j["a"] = fit.a;
                j["b"] = fit.b;
                j["eps_mid"] = fit.eps_mid;
                j["residual"] = fit.rms_residual;
                j["fit_range"] = {fit.first_rank, fit.last_rank};
                j["n"] = fit.n;
                j["iterations"] = fit.iterations;
                writer.json("ansatz.json", j);

                std::vector<double> grid;
                for (int rank = fit.first_rank; rank <= fit.last_rank; ++rank)
                    grid.push_back(ansatz_value(fit, rank));
                const DensityOfStates dos = density_of_states_curve(fit, grid);
                Table t{"density_of_states", {"eps", "density", "leading"}, {}};
                for (std::size_t i = 0; i < grid.size(); ++i)
                {
                    Table::Cell value;
                    if (dos.values[i])
                        value = *dos.values[i];
                    t.rows.push_back({grid[i], value, 1.0 / (fit.a * grid[i])});
                }
                writer.table(t);
                summary["ansatz"] = j;
                return 0;
            });
        }

        if (analyses.density)
        {
            stage("spectral", [&] {
                const Binning binning = default_binning(spectra, config.density_bins, config.density_scale);
                const DensityHistogram hist = spectral_density(spectra, binning);
                Table t{"density", {"bin_center", "width", "density"}, {}};
                for (std::size_t j = 0; j < hist.centers.size(); ++j)
                    t.rows.push_back({hist.centers[j], hist.widths[j], hist.densities[j]});
                writer.table(t);
                summary["density"] = {{"scale", binning.scale == BinScale::Linear ? "linear" : "log"},
                                      {"lower", binning.lower},
                                      {"upper", binning.upper},
                                      {"bins", binning.bins},
                                      {"excluded", hist.excluded},
                                      {"total", hist.total}};
                return 0;
            });
        }

        if (analyses.mp_compare)
        {
            stage("spectral", [&] {
                const CovarianceSeries correlation =
                    series.flavor == MatrixFlavor::Correlation ? series : to_correlation(covariance);
                const SpectrumSeries corr_spectra = spectrum_series(correlation, false, threads);
                const double q_teff = mp_ratio(n, kernel);
                const bool teff_valid = q_teff > 0.0 && q_teff <= 1.0;
                double upper = 1.05 * corr_spectra.values.maxCoeff();
                if (teff_valid)
                    upper = std::max(upper, mp_support(q_teff).second);
                if (config.mp_q)
                    upper = std::max(upper, mp_support(*config.mp_q).second);
                const Binning binning{BinScale::Linear, 0.0, upper, config.density_bins};
                const DensityHistogram hist = spectral_density(corr_spectra, binning);
                const double q_fit = fit_mp_ratio(hist);

                Table t{"mp_compare", {"bin_center", "width", "empirical", "mp_teff", "mp_fit"}, {}};
                if (config.mp_q)
                    t.columns.push_back("mp_override");
                for (std::size_t j = 0; j < hist.centers.size(); ++j)
                {
                    const double c = hist.centers[j];
                    std::vector<Table::Cell> row{c, hist.widths[j], hist.densities[j]};
                    row.emplace_back(teff_valid ? Table::Cell(mp_density(c, q_teff)) : Table::Cell());
                    row.emplace_back(mp_density(c, q_fit));
                    if (config.mp_q)
                        row.emplace_back(mp_density(c, *config.mp_q));
                    t.rows.push_back(std::move(row));
                }
                writer.table(t);
                ordered_json j;
                j["q_teff"] = q_teff;
                j["q_teff_in_range"] = teff_valid;
                j["q_fit"] = q_fit;
                j["q_override"] = config.mp_q ? ordered_json(*config.mp_q) : ordered_json(nullptr);
                j["excluded"] = hist.excluded;
                writer.json("mp_compare.json", j);
                summary["mp_compare"] = j;
                return 0;
            });
        }

        if (!analyses.projector_ranks.empty())
        {
            stage("subspace", [&] {
                Table spectrum{"mean_projector_spectrum", {"rank_k", "index", "value"}, {}};
                Table fluct{"fluctuation_index", {"k", "gamma", "gamma_max", "ratio"}, {}};
                ordered_json cuts = ordered_json::object();
                for (int k : analyses.projector_ranks)
                {
                    const MeanProjector mp = mean_projector(spectra, k, threads);
                    const Eigen::VectorXd values = projector_spectrum(mp);
                    for (Eigen::Index i = 0; i < values.size(); ++i)
                        spectrum.rows.push_back(
                            {static_cast<std::int64_t>(k), static_cast<std::int64_t>(i + 1), values(i)});
                    if (analyses.fluctuation)
                    {
                        const FluctuationIndex fi = fluctuation_index(mp);
                        Table::Cell ratio;
                        if (fi.ratio)
                            ratio = *fi.ratio;
                        fluct.rows.push_back({static_cast<std::int64_t>(k), fi.gamma, fi.gamma_max, ratio});
                    }
                    cuts[std::to_string(k)] = mp.degenerate_cuts;
                    if (mp.degenerate_cuts > 0)
                        spdlog::warn("rank {}: {} dates with an eigenvalue tie at the cut", k, mp.degenerate_cuts);
                }
                writer.table(spectrum);
                if (analyses.fluctuation)
                    writer.table(fluct);
                summary["degenerate_cuts"] = cuts;
                return 0;
            });
        }

        if (!analyses.lags.empty())
        {
            stage("subspace", [&] {
                const WeightKernel compact =
                    build_kernel({KernelScheme::Rectangular, config.lagged_kernel_length, 0.5, 2.0});
                const CovarianceSeries cov = rolling_covariance(returns, compact, DateRange{}, {UpdateMethod::Auto, threads});
                const CovarianceSeries x = config.flavor == MatrixFlavor::Correlation ? to_correlation(cov) : cov;
                Table t{"lagged_correlation", {"series", "lag", "rho"}, {}};
                const auto emit = [&](const std::string &label, const std::vector<double> &rho) {
                    for (std::size_t i = 0; i < rho.size(); ++i)
                        t.rows.push_back({label, static_cast<std::int64_t>(analyses.lags[i]), rho[i]});
                };
                emit(std::string(to_string(x.flavor)), matrix_lagged_correlation(x, analyses.lags));
                if (!analyses.projector_ranks.empty())
                {
                    const SpectrumSeries compact_spectra = spectrum_series(x, true, threads);
                    for (int k : analyses.projector_ranks)
                        emit("projector_" + std::to_string(k),
                             matrix_lagged_correlation(projector_series(compact_spectra, k, threads), analyses.lags));
                }
                writer.table(t);
                summary["lagged"] = {{"kernel_length", config.lagged_kernel_length}, {"series_length", x.size()}};
                return 0;
            });
        }

        return writer.complete(recorded, summary);
    }
    catch (const AnalysisError &e)
    {
        spdlog::debug("{}", e.what());
        writer.abort(recorded, e);
        throw;
    }
    catch (const std::exception &e)
    {
        const AnalysisError wrapped("cli", e.what());
        spdlog::debug("{}", wrapped.what());
        writer.abort(recorded, wrapped);
        throw wrapped;
    }
}

ReportBundle run_synth(const RunConfig &config)
{
    ordered_json recorded = recorded_config(config);
    recorded["synth.output"] = config.synth_output == SynthOutput::Prices ? "prices" : "returns";
    BundleWriter writer(config.output_dir, config.format);
    try
    {
        if (!config.ensemble)
            throw AnalysisError("ensembles", "synth requires an ensemble spec");
        const ReturnPanel returns = stage("ensembles", [&] { return generate_returns(*config.ensemble, config.threads); });
        ordered_json summary = {{"n_assets", returns.n_assets()}, {"n_return_dates", returns.n_dates()}};
        stage("panel-ingest", [&] {
            std::ostringstream out;
            if (config.synth_output == SynthOutput::Returns)
            {
                write_panel_csv(out, returns.asset_ids(), returns.dates, returns.returns);
                writer.text("returns.csv", out.str());
                return 0;
            }
            const auto origin = business_dates("1999-01-01", 1).front();
            const PricePanel mapped =
                integrate_returns(returns, Eigen::VectorXd::Zero(returns.n_assets()), origin);
            Eigen::MatrixXd prices(mapped.values.rows(), mapped.values.cols());
            for (Eigen::Index a = 0; a < prices.rows(); ++a)
                for (Eigen::Index t = 0; t < prices.cols(); ++t)
                    prices(a, t) = unmap_value(mapped.assets[static_cast<std::size_t>(a)], mapped.values(a, t));
            write_panel_csv(out, returns.asset_ids(), mapped.dates, prices);
            writer.text("prices.csv", out.str());
            return 0;
        });
        return writer.complete(recorded, summary);
    }
    catch (const AnalysisError &e)
    {
        writer.abort(recorded, e);
        throw;
    }
}

} // namespace covspec
