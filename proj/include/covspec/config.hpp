#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covspec/ensembles.hpp"
#include "covspec/kernel.hpp"
#include "covspec/moments.hpp"
#include "covspec/panel.hpp"
#include "covspec/spectral.hpp"

namespace covspec
{

enum class OutputFormat
{
    Csv,
    Json,
};

enum class SynthOutput
{
    Prices,
    Returns,
};

/// What the configuration is validated for: `analyze` needs at least one
/// analysis, `synth` needs an ensemble.
enum class ConfigPurpose
{
    Analyze,
    Synth,
};

struct AnalysisToggles
{
    bool spectrum = false;
    bool density = false;
    bool mp_compare = false;
    bool ansatz = false;
    bool fluctuation = false;
    std::vector<int> projector_ranks;
    std::vector<int> lags;

    bool any() const
    {
        return spectrum || density || mp_compare || ansatz || fluctuation || !projector_ranks.empty() ||
               !lags.empty();
    }
};

/// Fully resolved run configuration.
struct RunConfig
{
    std::optional<std::filesystem::path> input_path;
    std::optional<EnsembleSpec> ensemble;
    IngestConfig ingest;
    KernelSpec kernel;
    DateRange eval;
    MatrixFlavor flavor = MatrixFlavor::Covariance;
    AnalysisToggles analyses;
    int density_bins = 60;
    std::optional<BinScale> density_scale; // unset: chosen from the flavor
    std::optional<double> mp_q;            // user override of q for the M-P comparison
    std::optional<RankRange> ansatz_range; // unset: central 80% of ranks
    int lagged_kernel_length = 21;
    std::filesystem::path output_dir = "covspec_out";
    OutputFormat format = OutputFormat::Csv;
    bool dump_matrices = false;
    unsigned threads = 1;
    SynthOutput synth_output = SynthOutput::Prices;
};

/// Either a config or the complete list of problems found.
struct ConfigResult
{
    std::optional<RunConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return config.has_value(); }
};

/// Raw `key = value` pairs. `#` starts a comment. Syntax problems are appended to `errors`.
std::map<std::string, std::string> parse_key_values(const std::string &text, std::vector<std::string> &errors);

/// Validates raw pairs (already merged with overrides) and resolves every default.
ConfigResult normalize_config(const std::map<std::string, std::string> &raw, ConfigPurpose purpose);

/// Reads `path`, applies `overrides` (`key=value` strings) and normalizes.
ConfigResult validate_config(const std::filesystem::path &path, const std::vector<std::string> &overrides = {},
                             ConfigPurpose purpose = ConfigPurpose::Analyze);

ConfigResult validate_config_text(const std::string &text, const std::vector<std::string> &overrides = {},
                                  ConfigPurpose purpose = ConfigPurpose::Analyze);

/// Canonical key/value view of a resolved config (every default spelled out).
std::map<std::string, std::string> to_key_values(const RunConfig &config);

std::string to_config_text(const RunConfig &config);

} // namespace covspec
