#include "covspec/ensembles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>

#include "covspec/error.hpp"
#include "covspec/format.hpp"
#include "covspec/parallel.hpp"

namespace covspec
{

namespace
{

boost::random::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream)
{
    // seed_seq's mixing algorithm is fixed by the standard.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return boost::random::mt19937_64(seq);
}

} // namespace

std::string_view to_string(EnsembleKind kind)
{
    switch (kind)
    {
    case EnsembleKind::GaussianIid:
        return "gaussian-iid";
    case EnsembleKind::StudentIid:
        return "student-iid";
    case EnsembleKind::OneFactor:
        return "one-factor";
    }
    return "unknown";
}

EnsembleKind parse_ensemble_kind(std::string_view text)
{
    if (text == "gaussian-iid")
        return EnsembleKind::GaussianIid;
    if (text == "student-iid")
        return EnsembleKind::StudentIid;
    if (text == "one-factor")
        return EnsembleKind::OneFactor;
    throw ParameterError("unknown ensemble kind '" + std::string(text) +
                         "' (expected gaussian-iid, student-iid or one-factor)");
}

void validate(const EnsembleSpec &spec)
{
    if (spec.n_assets < 1)
        throw ParameterError("ensemble needs N >= 1, got " + std::to_string(spec.n_assets));
    if (spec.n_dates < 2)
        throw ParameterError("ensemble needs T >= 2, got " + std::to_string(spec.n_dates));
    if (spec.kind == EnsembleKind::StudentIid && !(spec.nu > 2.0))
        throw ParameterError("Student degrees of freedom must be > 2, got " + format_double(spec.nu));
    if (spec.kind == EnsembleKind::OneFactor && !(spec.beta >= 0.0 && spec.beta < 1.0))
        throw ParameterError("factor loading beta must be in [0, 1), got " + format_double(spec.beta));
}

ReturnPanel generate_returns(const EnsembleSpec &spec, unsigned threads)
{
    validate(spec);
    const auto n = static_cast<std::size_t>(spec.n_assets);
    const Eigen::Index t_count = spec.n_dates;

    ReturnPanel panel;
    panel.returns.resize(spec.n_assets, t_count);
    // The first business day is reserved for the price origin x(0).
    panel.dates = business_dates("1999-01-01", spec.n_dates + 1);
    panel.dates.erase(panel.dates.begin());
    panel.assets.reserve(n);
    for (std::size_t a = 0; a < n; ++a)
    {
        char id[32];
        std::snprintf(id, sizeof(id), "A%04zu", a);
        panel.assets.push_back({id, AssetClass::LogPrice, 0.04});
    }

    Eigen::VectorXd factor;
    if (spec.kind == EnsembleKind::OneFactor)
    {
        auto rng = substream(spec.seed, n);
        boost::random::normal_distribution<double> normal;
        factor.resize(t_count);
        for (Eigen::Index t = 0; t < t_count; ++t)
            factor(t) = normal(rng);
    }

    parallel_for(n, threads, [&](std::size_t a) {
        auto rng = substream(spec.seed, a);
        const auto row = static_cast<Eigen::Index>(a);
        switch (spec.kind)
        {
        case EnsembleKind::GaussianIid:
        {
            boost::random::normal_distribution<double> normal;
            for (Eigen::Index t = 0; t < t_count; ++t)
                panel.returns(row, t) = normal(rng);
            break;
        }
        case EnsembleKind::StudentIid:
        {
            boost::random::student_t_distribution<double> student(spec.nu);
            const double scale = std::sqrt((spec.nu - 2.0) / spec.nu);
            for (Eigen::Index t = 0; t < t_count; ++t)
                panel.returns(row, t) = scale * student(rng);
            break;
        }
        case EnsembleKind::OneFactor:
        {
            boost::random::normal_distribution<double> normal;
            const double idio = std::sqrt(1.0 - spec.beta * spec.beta);
            for (Eigen::Index t = 0; t < t_count; ++t)
                panel.returns(row, t) = spec.beta * factor(t) + idio * normal(rng);
            break;
        }
        }
    });
    return panel;
}

double top_eigenvalue_oracle(const EnsembleSpec &spec)
{
    if (spec.kind != EnsembleKind::OneFactor)
        throw ParameterError("top_eigenvalue_oracle requires a one-factor ensemble, got " +
                             std::string(to_string(spec.kind)));
    validate(spec);
    return 1.0 + (spec.n_assets - 1) * spec.beta * spec.beta;
}

std::vector<std::string> business_dates(std::string_view first, int count)
{
    using namespace std::chrono;
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(std::string(first).c_str(), "%d-%u-%u", &y, &m, &d) != 3)
        throw ParameterError("invalid ISO date '" + std::string(first) + "'");
    const year_month_day start{year{y}, month{m}, day{d}};
    if (!start.ok())
        throw ParameterError("invalid ISO date '" + std::string(first) + "'");

    std::vector<std::string> dates;
    dates.reserve(static_cast<std::size_t>(std::max(count, 0)));
    sys_days day_point{start};
    while (static_cast<int>(dates.size()) < count)
    {
        const weekday wd{day_point};
        if (wd != Saturday && wd != Sunday)
        {
            const year_month_day ymd{day_point};
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
            dates.emplace_back(buf);
        }
        day_point += days{1};
    }
    return dates;
}

} // namespace covspec
