#include "covspec/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "covspec/error.hpp"
#include "covspec/format.hpp"

namespace covspec
{

namespace
{

const std::set<std::string> &known_keys()
{
    static const std::set<std::string> keys = {
        "input.path",         "input.missing",         "assets.interest_rate", "assets.rate_scale",
        "ensemble.kind",      "ensemble.n_assets",     "ensemble.n_dates",     "ensemble.nu",
        "ensemble.beta",      "ensemble.seed",         "kernel.scheme",        "kernel.length",
        "kernel.mu",          "kernel.tau0_days",      "eval.from",            "eval.to",
        "analysis.flavor",    "analysis.spectrum",     "analysis.density",     "analysis.mp_compare",
        "analysis.ansatz",    "analysis.fluctuation",  "analysis.projectors",  "analysis.lagged",
        "density.bins",       "density.scale",         "mp.q",                 "ansatz.first_rank",
        "ansatz.last_rank",   "lagged.kernel_length",  "output.dir",           "output.format",
        "output.dump_matrices", "run.threads",         "synth.output",
    };
    return keys;
}

/// Typed accessors that collect errors instead of throwing.
class Reader
{
public:
    Reader(const std::map<std::string, std::string> &raw, std::vector<std::string> &errors)
        : raw_(raw), errors_(errors)
    {
    }

    bool has(const std::string &key) const { return raw_.count(key) > 0; }

    std::optional<std::string> text(const std::string &key) const
    {
        const auto it = raw_.find(key);
        if (it == raw_.end())
            return std::nullopt;
        return it->second;
    }

    template <class T>
    void integer(const std::string &key, T &out)
    {
        const auto v = text(key);
        if (!v)
            return;
        long long parsed = 0;
        std::size_t used = 0;
        try
        {
            parsed = std::stoll(*v, &used);
        }
        catch (const std::exception &)
        {
            used = 0;
        }
        if (used == 0 || used != v->size())
        {
            mismatch(key, "integer", *v);
            return;
        }
        out = static_cast<T>(parsed);
    }

    void real(const std::string &key, double &out)
    {
        const auto v = text(key);
        if (!v)
            return;
        double parsed = 0.0;
        if (!parse_double(*v, parsed) || !std::isfinite(parsed))
        {
            mismatch(key, "real number", *v);
            return;
        }
        out = parsed;
    }

    void boolean(const std::string &key, bool &out)
    {
        const auto v = text(key);
        if (!v)
            return;
        if (*v == "true" || *v == "yes" || *v == "on" || *v == "1")
            out = true;
        else if (*v == "false" || *v == "no" || *v == "off" || *v == "0")
            out = false;
        else
            mismatch(key, "boolean (true/false)", *v);
    }

    void int_list(const std::string &key, std::vector<int> &out)
    {
        const auto v = text(key);
        if (!v)
            return;
        out.clear();
        if (trim(*v).empty() || *v == "none")
            return;
        for (const auto &field : split_csv_line(*v))
        {
            std::size_t used = 0;
            int parsed = 0;
            try
            {
                parsed = std::stoi(field, &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used == 0 || used != field.size())
            {
                mismatch(key, "comma-separated integer list", *v);
                out.clear();
                return;
            }
            out.push_back(parsed);
        }
    }

    template <class T>
    void choice(const std::string &key, T &out, const std::function<T(std::string_view)> &parse)
    {
        const auto v = text(key);
        if (!v)
            return;
        try
        {
            out = parse(*v);
        }
        catch (const Error &e)
        {
            errors_.push_back("key '" + key + "': " + e.what());
        }
    }

    void error(const std::string &message) { errors_.push_back(message); }

private:
    void mismatch(const std::string &key, const std::string &expected, const std::string &got)
    {
        errors_.push_back("key '" + key + "': expected " + expected + ", got '" + got + "'");
    }

    const std::map<std::string, std::string> &raw_;
    std::vector<std::string> &errors_;
};

std::string join(const std::vector<int> &values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i > 0)
            out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

void apply_override(std::map<std::string, std::string> &raw, const std::string &item, std::vector<std::string> &errors)
{
    const auto eq = item.find('=');
    if (eq == std::string::npos)
    {
        errors.push_back("override '" + item + "': expected key=value");
        return;
    }
    raw[std::string(trim(std::string_view(item).substr(0, eq)))] =
        std::string(trim(std::string_view(item).substr(eq + 1)));
}

} // namespace

std::map<std::string, std::string> parse_key_values(const std::string &text, std::vector<std::string> &errors)
{
    std::map<std::string, std::string> raw;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto hash = line.find('#');
        const auto content = trim(std::string_view(line).substr(0, hash));
        if (content.empty())
            continue;
        const auto eq = content.find('=');
        if (eq == std::string_view::npos)
        {
            errors.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
            continue;
        }
        const std::string key(trim(content.substr(0, eq)));
        const std::string value(trim(content.substr(eq + 1)));
        if (key.empty())
        {
            errors.push_back("line " + std::to_string(line_no) + ": empty key");
            continue;
        }
        if (!raw.emplace(key, value).second)
            errors.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    return raw;
}

ConfigResult normalize_config(const std::map<std::string, std::string> &raw, ConfigPurpose purpose)
{
    ConfigResult result;
    auto &errors = result.errors;
    for (const auto &[key, value] : raw)
        if (!known_keys().count(key))
            errors.push_back("unknown key '" + key + "'");

    Reader r(raw, errors);
    RunConfig c;

    // Input: exactly one of a CSV path or an ensemble.
    const bool has_ensemble = std::any_of(raw.begin(), raw.end(),
                                          [](const auto &kv) { return kv.first.rfind("ensemble.", 0) == 0; });
    if (auto path = r.text("input.path"))
    {
        if (path->empty())
            errors.push_back("key 'input.path': empty path");
        c.input_path = *path;
    }
    if (c.input_path && has_ensemble)
        errors.push_back("ambiguous input: both input.path and ensemble.* keys are set");
    if (!c.input_path && !has_ensemble)
        errors.push_back("no input: set input.path or ensemble.kind");
    if (purpose == ConfigPurpose::Synth && !has_ensemble)
        errors.push_back("synth requires an ensemble (ensemble.kind)");

    if (has_ensemble)
    {
        EnsembleSpec e;
        if (!r.has("ensemble.kind"))
            errors.push_back("key 'ensemble.kind' is required when ensemble keys are set");
        r.choice<EnsembleKind>("ensemble.kind", e.kind, parse_ensemble_kind);
        r.integer("ensemble.n_assets", e.n_assets);
        r.integer("ensemble.n_dates", e.n_dates);
        r.real("ensemble.nu", e.nu);
        r.real("ensemble.beta", e.beta);
        r.integer("ensemble.seed", e.seed);
        if (e.n_assets < 1)
            errors.push_back("key 'ensemble.n_assets': must be >= 1");
        if (e.n_dates < 2)
            errors.push_back("key 'ensemble.n_dates': must be >= 2");
        if (e.kind == EnsembleKind::StudentIid && !(e.nu > 2.0))
            errors.push_back("key 'ensemble.nu': nu must be > 2");
        if (e.kind == EnsembleKind::OneFactor && !(e.beta >= 0.0 && e.beta < 1.0))
            errors.push_back("key 'ensemble.beta': beta must be in [0,1)");
        c.ensemble = e;
    }

    r.choice<MissingPolicy>("input.missing", c.ingest.missing, [](std::string_view v) {
        if (v == "reject")
            return MissingPolicy::Reject;
        if (v == "forward-fill")
            return MissingPolicy::ForwardFill;
        throw ParameterError("expected reject or forward-fill, got '" + std::string(v) + "'");
    });
    double rate_scale = 0.04;
    r.real("assets.rate_scale", rate_scale);
    if (!(rate_scale > 0.0))
        errors.push_back("key 'assets.rate_scale': R0 must be > 0");
    if (auto ids = r.text("assets.interest_rate"))
        for (const auto &id : split_csv_line(*ids))
            if (!id.empty())
                c.ingest.assets.push_back({id, AssetClass::InterestRate, rate_scale});

    r.choice<KernelScheme>("kernel.scheme", c.kernel.scheme, parse_kernel_scheme);
    r.integer("kernel.length", c.kernel.length);
    r.real("kernel.mu", c.kernel.mu);
    r.real("kernel.tau0_days", c.kernel.tau0_days);
    if (c.kernel.length < 1)
        errors.push_back("key 'kernel.length': length must be >= 1");
    if (!(c.kernel.mu > 0.0 && c.kernel.mu < 1.0))
        errors.push_back("key 'kernel.mu': mu must be in (0,1)");
    if (!(c.kernel.tau0_days > 1.0))
        errors.push_back("key 'kernel.tau0_days': tau0 must be > 1");

    if (auto v = r.text("eval.from"))
        c.eval.from = *v;
    if (auto v = r.text("eval.to"))
        c.eval.to = *v;

    r.choice<MatrixFlavor>("analysis.flavor", c.flavor, [](std::string_view v) {
        if (v == "covariance")
            return MatrixFlavor::Covariance;
        if (v == "correlation")
            return MatrixFlavor::Correlation;
        throw ParameterError("expected covariance or correlation, got '" + std::string(v) + "'");
    });
    auto &a = c.analyses;
    r.boolean("analysis.spectrum", a.spectrum);
    r.boolean("analysis.density", a.density);
    r.boolean("analysis.mp_compare", a.mp_compare);
    r.boolean("analysis.ansatz", a.ansatz);
    r.boolean("analysis.fluctuation", a.fluctuation);
    r.int_list("analysis.projectors", a.projector_ranks);
    r.int_list("analysis.lagged", a.lags);
    for (int k : a.projector_ranks)
    {
        if (k < 1)
            errors.push_back("key 'analysis.projectors': rank " + std::to_string(k) + " must be >= 1");
        else if (c.ensemble && k > c.ensemble->n_assets)
            errors.push_back("key 'analysis.projectors': rank " + std::to_string(k) + " exceeds N=" +
                             std::to_string(c.ensemble->n_assets));
    }
    for (int lag : a.lags)
        if (lag < 0)
            errors.push_back("key 'analysis.lagged': lag " + std::to_string(lag) + " must be >= 0");
    if (a.fluctuation && a.projector_ranks.empty())
        errors.push_back("analysis.fluctuation requires a rank list in analysis.projectors");
    if (purpose == ConfigPurpose::Analyze && !a.any())
        errors.push_back("no analysis enabled");

    r.integer("density.bins", c.density_bins);
    if (c.density_bins < 1)
        errors.push_back("key 'density.bins': must be >= 1");
    if (auto v = r.text("density.scale"))
    {
        if (*v == "linear")
            c.density_scale = BinScale::Linear;
        else if (*v == "log")
            c.density_scale = BinScale::Logarithmic;
        else if (*v != "auto")
            errors.push_back("key 'density.scale': expected auto, linear or log, got '" + *v + "'");
    }
    if (r.has("mp.q"))
    {
        double q = 0.0;
        r.real("mp.q", q);
        if (!(q > 0.0 && q <= 1.0))
            errors.push_back("key 'mp.q': q must be in (0,1]");
        c.mp_q = q;
    }
    if (r.has("ansatz.first_rank") || r.has("ansatz.last_rank"))
    {
        RankRange range{-1, -1};
        r.integer("ansatz.first_rank", range.first);
        r.integer("ansatz.last_rank", range.last);
        if (range.first < 1 || range.last < range.first + 2)
            errors.push_back("ansatz.first_rank and ansatz.last_rank must both be set with 1 <= first < last - 1");
        c.ansatz_range = range;
    }

    r.integer("lagged.kernel_length", c.lagged_kernel_length);
    if (c.lagged_kernel_length < 1)
        errors.push_back("key 'lagged.kernel_length': must be >= 1");

    if (auto v = r.text("output.dir"))
        c.output_dir = *v;
    r.choice<OutputFormat>("output.format", c.format, [](std::string_view v) {
        if (v == "csv")
            return OutputFormat::Csv;
        if (v == "json")
            return OutputFormat::Json;
        throw ParameterError("expected csv or json, got '" + std::string(v) + "'");
    });
    r.boolean("output.dump_matrices", c.dump_matrices);
    long long threads = 1;
    r.integer("run.threads", threads);
    if (threads < 1 || threads > 1024)
        errors.push_back("key 'run.threads': must be in [1, 1024]");
    c.threads = static_cast<unsigned>(std::clamp<long long>(threads, 1, 1024));
    r.choice<SynthOutput>("synth.output", c.synth_output, [](std::string_view v) {
        if (v == "prices")
            return SynthOutput::Prices;
        if (v == "returns")
            return SynthOutput::Returns;
        throw ParameterError("expected prices or returns, got '" + std::string(v) + "'");
    });

    if (errors.empty())
        result.config = std::move(c);
    return result;
}

ConfigResult validate_config_text(const std::string &text, const std::vector<std::string> &overrides,
                                  ConfigPurpose purpose)
{
    std::vector<std::string> errors;
    auto raw = parse_key_values(text, errors);
    for (const auto &item : overrides)
        apply_override(raw, item, errors);
    ConfigResult result = normalize_config(raw, purpose);
    if (!errors.empty())
    {
        errors.insert(errors.end(), result.errors.begin(), result.errors.end());
        result.errors = std::move(errors);
        result.config.reset();
    }
    return result;
}

ConfigResult validate_config(const std::filesystem::path &path, const std::vector<std::string> &overrides,
                             ConfigPurpose purpose)
{
    std::ifstream in(path);
    if (!in)
        return {std::nullopt, {"cannot read config file " + path.string()}};
    std::stringstream buffer;
    buffer << in.rdbuf();
    return validate_config_text(buffer.str(), overrides, purpose);
}

std::map<std::string, std::string> to_key_values(const RunConfig &c)
{
    std::map<std::string, std::string> kv;
    if (c.input_path)
    {
        kv["input.path"] = c.input_path->string();
        kv["input.missing"] = c.ingest.missing == MissingPolicy::Reject ? "reject" : "forward-fill";
        std::vector<std::string> rates;
        double rate_scale = 0.04;
        for (const auto &asset : c.ingest.assets)
            if (asset.asset_class == AssetClass::InterestRate)
            {
                rates.push_back(asset.id);
                rate_scale = asset.rate_scale;
            }
        std::string joined;
        for (std::size_t i = 0; i < rates.size(); ++i)
            joined += (i ? "," : "") + rates[i];
        kv["assets.interest_rate"] = joined;
        kv["assets.rate_scale"] = format_shortest(rate_scale);
    }
    if (c.ensemble)
    {
        const auto &e = *c.ensemble;
        kv["ensemble.kind"] = std::string(to_string(e.kind));
        kv["ensemble.n_assets"] = std::to_string(e.n_assets);
        kv["ensemble.n_dates"] = std::to_string(e.n_dates);
        kv["ensemble.nu"] = format_shortest(e.nu);
        kv["ensemble.beta"] = format_shortest(e.beta);
        kv["ensemble.seed"] = std::to_string(e.seed);
    }
    kv["kernel.scheme"] = std::string(to_string(c.kernel.scheme));
    kv["kernel.length"] = std::to_string(c.kernel.length);
    kv["kernel.mu"] = format_shortest(c.kernel.mu);
    kv["kernel.tau0_days"] = format_shortest(c.kernel.tau0_days);
    if (c.eval.from)
        kv["eval.from"] = *c.eval.from;
    if (c.eval.to)
        kv["eval.to"] = *c.eval.to;
    kv["analysis.flavor"] = std::string(to_string(c.flavor));
    const auto flag = [](bool b) { return b ? std::string("true") : std::string("false"); };
    kv["analysis.spectrum"] = flag(c.analyses.spectrum);
    kv["analysis.density"] = flag(c.analyses.density);
    kv["analysis.mp_compare"] = flag(c.analyses.mp_compare);
    kv["analysis.ansatz"] = flag(c.analyses.ansatz);
    kv["analysis.fluctuation"] = flag(c.analyses.fluctuation);
    kv["analysis.projectors"] = join(c.analyses.projector_ranks);
    kv["analysis.lagged"] = join(c.analyses.lags);
    kv["density.bins"] = std::to_string(c.density_bins);
    kv["density.scale"] = !c.density_scale                               ? "auto"
                          : *c.density_scale == BinScale::Linear ? "linear"
                                                                         : "log";
    if (c.mp_q)
        kv["mp.q"] = format_shortest(*c.mp_q);
    if (c.ansatz_range)
    {
        kv["ansatz.first_rank"] = std::to_string(c.ansatz_range->first);
        kv["ansatz.last_rank"] = std::to_string(c.ansatz_range->last);
    }
    kv["lagged.kernel_length"] = std::to_string(c.lagged_kernel_length);
    kv["output.dir"] = c.output_dir.string();
    kv["output.format"] = c.format == OutputFormat::Csv ? "csv" : "json";
    kv["output.dump_matrices"] = flag(c.dump_matrices);
    kv["run.threads"] = std::to_string(c.threads);
    kv["synth.output"] = c.synth_output == SynthOutput::Prices ? "prices" : "returns";
    return kv;
}

std::string to_config_text(const RunConfig &config)
{
    std::string out;
    for (const auto &[key, value] : to_key_values(config))
        out += key + " = " + value + "\n";
    return out;
}

} // namespace covspec
