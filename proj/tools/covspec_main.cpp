#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "covspec/config.hpp"
#include "covspec/report.hpp"

namespace
{

void configure_logging()
{
    auto logger = spdlog::stderr_color_mt("covspec");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char *level = std::getenv("COVSPEC_LOG"))
        spdlog::set_level(spdlog::level::from_str(level));
}

struct Options
{
    std::string config_path;
    std::string out;
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
    std::string format;
    std::vector<std::string> overrides;
};

std::vector<std::string> collect_overrides(const Options &opts)
{
    std::vector<std::string> items = opts.overrides;
    if (!opts.out.empty())
        items.push_back("output.dir=" + opts.out);
    if (opts.threads > 0)
        items.push_back("run.threads=" + std::to_string(opts.threads));
    if (!opts.format.empty())
        items.push_back("output.format=" + opts.format);
    return items;
}

std::optional<covspec::RunConfig> load(const Options &opts, covspec::ConfigPurpose purpose)
{
    auto result = covspec::validate_config(opts.config_path, collect_overrides(opts), purpose);
    if (!result.ok())
    {
        for (const auto &e : result.errors)
            std::cerr << "config error: " << e << '\n';
        return std::nullopt;
    }
    auto config = std::move(*result.config);
    if (opts.seed)
    {
        if (!config.ensemble)
        {
            std::cerr << "config error: --seed given but the input is not a synthetic ensemble\n";
            return std::nullopt;
        }
        config.ensemble->seed = *opts.seed;
    }
    return config;
}

void add_common(CLI::App *cmd, Options &opts)
{
    cmd->add_option("config", opts.config_path, "Run configuration (key = value lines)")->required();
    cmd->add_option("--set", opts.overrides, "Override a config key (key=value), repeatable");
}

} // namespace

int main(int argc, char **argv)
{
    configure_logging();

    CLI::App app{"covspec: spectral and subspace diagnostics of rolling covariance matrices"};
    app.require_subcommand(1);

    Options opts;
    app.add_option("--out", opts.out, "Output directory (overrides output.dir)");
    app.add_option("--threads", opts.threads, "Worker threads (overrides run.threads)")->check(CLI::Range(1u, 1024u));
    app.add_option("--seed", opts.seed, "Ensemble seed (overrides ensemble.seed)");
    app.add_option("--format", opts.format, "Tabular output format")->check(CLI::IsMember({"csv", "json"}));

    auto *analyze = app.add_subcommand("analyze", "Run the configured analyses and write a report bundle");
    auto *synth = app.add_subcommand("synth", "Write a synthetic price or return panel");
    auto *validate = app.add_subcommand("validate", "Check a config and print it with all defaults resolved");
    for (auto *cmd : {analyze, synth, validate})
    {
        add_common(cmd, opts);
        cmd->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    if (*validate)
    {
        const auto config = load(opts, covspec::ConfigPurpose::Analyze);
        if (!config)
            return 1;
        std::cout << covspec::to_config_text(*config);
        return 0;
    }

    const auto purpose = *synth ? covspec::ConfigPurpose::Synth : covspec::ConfigPurpose::Analyze;
    const auto config = load(opts, purpose);
    if (!config)
        return 1;

    try
    {
        const auto bundle = *synth ? covspec::run_synth(*config) : covspec::run_analysis(*config);
        for (const auto &file : bundle.files)
            std::cout << file.name << ' ' << file.sha256 << '\n';
        std::cout << "manifest " << bundle.manifest.string() << '\n';
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
