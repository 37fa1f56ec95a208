#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "covspec/config.hpp"
#include "covspec/error.hpp"

namespace covspec
{

/// Error raised by run_analysis; the message is prefixed with the failing module.
class AnalysisError : public Error
{
public:
    AnalysisError(std::string module, const std::string &what)
        : Error(module + ": " + what), module_(std::move(module))
    {
    }

    const std::string &module() const noexcept { return module_; }

private:
    std::string module_;
};

struct EmittedFile
{
    std::string name; // relative to the bundle directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct ReportBundle
{
    std::filesystem::path directory;
    std::vector<EmittedFile> files; // sorted by name, manifest excluded
    std::filesystem::path manifest;
};

/// Tabular output written as CSV or JSON depending on the run format.
struct Table
{
    using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

    std::string stem;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string sha256_hex(const std::filesystem::path &file);

/// Runs every enabled analysis and writes the bundle plus `manifest.json`.
///
/// On failure every emitted file is removed, the manifest is written with
/// `"status": "incomplete"` and the error, and AnalysisError is thrown.
ReportBundle run_analysis(const RunConfig &config);

/// Writes a synthetic panel (prices by default) into the output directory.
ReportBundle run_synth(const RunConfig &config);

} // namespace covspec
