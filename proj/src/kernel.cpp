#include "covspec/kernel.hpp"

#include <cmath>
#include <numeric>

#include "covspec/error.hpp"
#include "covspec/format.hpp"

namespace covspec
{

std::string_view to_string(KernelScheme scheme)
{
    switch (scheme)
    {
    case KernelScheme::Rectangular:
        return "rectangular";
    case KernelScheme::Exponential:
        return "exponential";
    case KernelScheme::LongMemory:
        return "long-memory";
    }
    return "unknown";
}

KernelScheme parse_kernel_scheme(std::string_view text)
{
    if (text == "rectangular")
        return KernelScheme::Rectangular;
    if (text == "exponential")
        return KernelScheme::Exponential;
    if (text == "long-memory")
        return KernelScheme::LongMemory;
    throw ParameterError("unknown kernel scheme '" + std::string(text) +
                         "' (expected rectangular, exponential or long-memory)");
}

WeightKernel build_kernel(const KernelSpec &spec)
{
    if (spec.length < 1)
        throw ParameterError("kernel length must be >= 1, got " + std::to_string(spec.length));

    WeightKernel kernel;
    kernel.spec = spec;
    auto &w = kernel.weights;
    w.resize(static_cast<std::size_t>(spec.length));

    switch (spec.scheme)
    {
    case KernelScheme::Rectangular:
        std::fill(w.begin(), w.end(), 1.0);
        break;
    case KernelScheme::Exponential:
        if (!(spec.mu > 0.0 && spec.mu < 1.0))
            throw ParameterError("mu must be in (0,1), got " + format_double(spec.mu));
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = std::pow(spec.mu, static_cast<double>(i));
        break;
    case KernelScheme::LongMemory:
    {
        if (!(spec.tau0_days > 1.0))
            throw ParameterError("tau0 must be > 1 day, got " + format_double(spec.tau0_days));
        const double log_tau0 = std::log(spec.tau0_days);
        std::size_t clipped = 0;
        for (std::size_t i = 0; i < w.size(); ++i)
        {
            const double raw = 1.0 - std::log(static_cast<double>(i + 1)) / log_tau0;
            if (raw <= 0.0)
                ++clipped;
            w[i] = std::max(raw, 0.0);
        }
        if (clipped > 0)
            kernel.warnings.push_back("long-memory kernel: tau0=" + format_double(spec.tau0_days) +
                                      " <= window length " + std::to_string(spec.length) + ", " +
                                      std::to_string(clipped) + " weights clipped to zero");
        break;
    }
    }

    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto &x : w)
        x /= total;
    return kernel;
}

double effective_length(const WeightKernel &kernel)
{
    double sum_sq = 0.0;
    for (double x : kernel.weights)
        sum_sq += x * x;
    return 1.0 / sum_sq;
}

} // namespace covspec
