#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace covspec
{

enum class KernelScheme
{
    Rectangular,
    Exponential,
    LongMemory,
};

std::string_view to_string(KernelScheme scheme);
KernelScheme parse_kernel_scheme(std::string_view text);

struct KernelSpec
{
    KernelScheme scheme = KernelScheme::LongMemory;
    int length = 260;        // number of weights, indices 0..length-1
    double mu = 0.94;        // exponential decay per day
    double tau0_days = 1560; // long-memory decay horizon
};

/// Normalized weights lambda(0..L-1) applied to the past return cross products.
///
/// Weights are non-negative, non-increasing and sum to one. `warnings` records
/// any clipping that happened while building the long-memory shape.
struct WeightKernel
{
    KernelSpec spec;
    std::vector<double> weights;
    std::vector<std::string> warnings;

    int length() const { return static_cast<int>(weights.size()); }
};

/// Rectangular: 1/L. Exponential: mu^i normalized.
/// Long-memory: 1 - ln(i+1)/ln(tau0), clipped at zero, normalized.
WeightKernel build_kernel(const KernelSpec &spec);

/// Effective sample size 1 / sum(lambda^2).
double effective_length(const WeightKernel &kernel);

} // namespace covspec
