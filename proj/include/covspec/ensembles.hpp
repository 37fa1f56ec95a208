#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "covspec/panel.hpp"

namespace covspec
{

enum class EnsembleKind
{
    GaussianIid,
    StudentIid,
    OneFactor,
};

std::string_view to_string(EnsembleKind kind);
EnsembleKind parse_ensemble_kind(std::string_view text);

struct EnsembleSpec
{
    EnsembleKind kind = EnsembleKind::GaussianIid;
    int n_assets = 10;
    int n_dates = 500;
    double nu = 5.0;   // Student degrees of freedom
    double beta = 0.0; // one-factor loading
    std::uint64_t seed = 42;
};

void validate(const EnsembleSpec &spec);

/// Synthetic unit-variance returns, N x T.
///
/// Each asset (and the common factor) draws from its own Mersenne-Twister
/// stream seeded from (seed, stream id), so output depends only on `spec`.
/// Student draws are scaled by sqrt((nu-2)/nu). One-factor returns are
/// beta f + sqrt(1 - beta^2) eta with f and eta standard normal.
ReturnPanel generate_returns(const EnsembleSpec &spec, unsigned threads = 1);

/// Leading eigenvalue 1 + (N-1) beta^2 of the one-factor population correlation.
double top_eigenvalue_oracle(const EnsembleSpec &spec);

/// `count` consecutive weekdays starting at or after `first` (ISO yyyy-mm-dd).
std::vector<std::string> business_dates(std::string_view first, int count);

} // namespace covspec
