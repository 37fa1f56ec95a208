// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "covspec/ensembles.hpp"
#include "covspec/kernel.hpp"
#include "covspec/moments.hpp"
#include "covspec/spectral.hpp"
#include "covspec/subspace.hpp"
#include "support.hpp"

using namespace covspec;

namespace
{

struct Outcome
{
    bool pass = false;
    std::string detail;
};

/// Running audit of every correlation spectrum produced in this binary.
struct CorrelationAudit
{
    std::size_t matrices = 0;
    std::size_t violations = 0;
    double worst_sum = 0.0;
    double worst_bound = 0.0;

    void check(const Eigen::Ref<const Eigen::VectorXd> &eigenvalues)
    {
        const auto n = static_cast<double>(eigenvalues.size());
        const double sum_err = std::abs(eigenvalues.sum() - n);
        const double bound_err = std::max({0.0, -eigenvalues.minCoeff(), eigenvalues.maxCoeff() - n});
        worst_sum = std::max(worst_sum, sum_err);
        worst_bound = std::max(worst_bound, bound_err);
        ++matrices;
        if (sum_err > 1e-9 || bound_err > 1e-9)
            ++violations;
    }

    void check(const SpectrumSeries &s)
    {
        for (Eigen::Index t = 0; t < s.n_dates(); ++t)
            check(s.values.row(t).transpose());
    }
};

CorrelationAudit audit;

WeightKernel rectangular(int length)
{
    return build_kernel({KernelScheme::Rectangular, length, 0.94, 1560});
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- 1 and 2: Marchenko-Pastur experiment ---------------------------------

struct MpExperiment
{
    DensityHistogram hist;
    Binning binning;
    std::vector<double> eigenvalues;
    double runtime = 0.0;
    double q = 0.0;
};

const MpExperiment &mp_experiment()
{
    static const MpExperiment result = [] {
        MpExperiment e;
        const int n = 100, samples = 50;
        const auto kernel = rectangular(500);
        e.q = mp_ratio(n, kernel);
        const auto [lo, hi] = mp_support(e.q);
        e.binning = {BinScale::Linear, 0.0, hi + 0.25, 40};
        e.hist = make_histogram(e.binning);
        const auto start = std::chrono::steady_clock::now();
        for (int s = 0; s < samples; ++s)
        {
            const auto returns = generate_returns({EnsembleKind::GaussianIid, n, 500, 5.0, 0.0, 1000u + s});
            const auto corr = to_correlation(rolling_covariance(returns, kernel));
            const auto spectra = spectrum_series(corr, false);
            audit.check(spectra);
            accumulate(e.hist, e.binning, spectra.values.row(0).transpose());
            for (Eigen::Index a = 0; a < n; ++a)
                e.eigenvalues.push_back(spectra.values(0, a));
        }
        finalize(e.hist);
        e.runtime = seconds_since(start);
        (void)lo;
        return e;
    }();
    return result;
}

Outcome criterion_1()
{
    const auto &e = mp_experiment();
    using boost::math::quadrature::gauss_kronrod;
    const auto [lo, hi] = mp_support(e.q);
    double peak = 0.0;
    for (int i = 1; i < 4000; ++i)
        peak = std::max(peak, mp_density(lo + (hi - lo) * i / 4000.0, e.q));

    // Compare each bin inside the support with the bin average of the exact density.
    double deviation = 0.0;
    int bins = 0;
    for (std::size_t j = 0; j < e.hist.centers.size(); ++j)
    {
        const double a = e.hist.centers[j] - 0.5 * e.hist.widths[j];
        const double b = e.hist.centers[j] + 0.5 * e.hist.widths[j];
        if (b <= lo || a >= hi)
            continue;
        const double expected =
            gauss_kronrod<double, 31>::integrate([&](double x) { return mp_density(x, e.q); }, std::max(a, lo),
                                                 std::min(b, hi), 10, 1e-12) /
            e.hist.widths[j];
        deviation += std::abs(e.hist.densities[j] - expected);
        ++bins;
    }
    const double mad = deviation / bins;
    const bool pass = mad < 0.15 * peak && e.runtime < 60.0;
    return {pass, fmt::format("q={:.3f}, MAD/peak={:.4f} over {} bins (< 0.15), runtime {:.2f} s (< 60 s)", e.q,
                              mad / peak, bins, e.runtime)};
}

Outcome criterion_2()
{
    const auto &e = mp_experiment();
    const auto [lo, hi] = mp_support(e.q);
    std::size_t outside = 0;
    for (double v : e.eigenvalues)
        if (v < lo - 0.1 || v > hi + 0.1)
            ++outside;
    const double fraction = static_cast<double>(outside) / static_cast<double>(e.eigenvalues.size());
    return {fraction < 0.01, fmt::format("{} of {} eigenvalues outside [{:.4f}, {:.4f}]: fraction {:.5f} (< 0.01)",
                                         outside, e.eigenvalues.size(), lo - 0.1, hi + 0.1, fraction)};
}

// --- 3: correlation spectrum constraints ----------------------------------

Outcome criterion_3()
{
    // Perfectly correlated panel.
    testing::Gen gen(303);
    const int n = 12;
    Eigen::MatrixXd r(n, 80);
    const Eigen::MatrixXd base = gen.normal_matrix(1, 80);
    for (int a = 0; a < n; ++a)
        r.row(a) = (0.5 + a) * base;
    const auto rank1 = spectrum_series(to_correlation(rolling_covariance(testing::make_returns(r), rectangular(40))),
                                       false);
    audit.check(rank1);
    double worst_top = 0.0;
    for (Eigen::Index t = 0; t < rank1.n_dates(); ++t)
        worst_top = std::max(worst_top, std::abs(rank1.values(t, 0) - n));

    // Random panels across kernels, including N > L (rank deficient).
    for (int trial = 0; trial < 30; ++trial)
    {
        const int dim = gen.integer(2, 60);
        const int len = gen.integer(2, 120);
        const auto scheme = static_cast<KernelScheme>(gen.integer(0, 2));
        Eigen::MatrixXd x = gen.normal_matrix(dim, len + 30);
        for (int a = 0; a < dim; ++a)
            x.row(a) *= std::exp(gen.uniform(-4.0, 2.0));
        const auto corr = to_correlation(
            rolling_covariance(testing::make_returns(x), build_kernel({scheme, len, 0.9, 1560})));
        audit.check(spectrum_series(corr, false));
    }

    const bool pass = audit.violations == 0 && worst_top <= 1e-9;
    return {pass, fmt::format("{} correlation matrices, {} violations, max |sum-N|={:.2e}, max bound excess={:.2e}; "
                              "rank-1 |eps_1-N|={:.2e} (<= 1e-9)",
                              audit.matrices, audit.violations, audit.worst_sum, audit.worst_bound, worst_top)};
}

// --- 4: eigen contract -----------------------------------------------------

Outcome criterion_4()
{
    testing::Gen gen(404);
    double worst_rec = 0.0, worst_orth = 0.0;
    for (int n : {5, 50, 200})
        for (int trial = 0; trial < 5; ++trial)
        {
            const Eigen::MatrixXd a = gen.symmetric(n);
            const auto e = eigendecompose(a);
            worst_rec = std::max(worst_rec,
                                 testing::rel_fro(e.vectors * e.values.asDiagonal() * e.vectors.transpose(), a));
            worst_orth = std::max(worst_orth,
                                  (e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(n, n)).norm());
        }
    return {worst_rec < 1e-10 && worst_orth < 1e-10,
            fmt::format("max reconstruction {:.2e}, max orthonormality {:.2e} (< 1e-10)", worst_rec, worst_orth)};
}

// --- 5: projector suite ----------------------------------------------------

Outcome criterion_5()
{
    testing::Gen gen(505);
    const int t = 100, n = 30;
    CovarianceSeries cov;
    cov.dates = testing::day_labels(t);
    for (int i = 0; i < t; ++i)
    {
        const Eigen::MatrixXd x = gen.normal_matrix(n, 45);
        cov.matrices.push_back(x * x.transpose() / 45.0);
    }
    const auto spectra = spectrum_series(cov, true);

    double worst_idem = 0.0, worst_trace = 0.0, worst_mean_trace = 0.0;
    bool gamma_in_range = true;
    for (int k = 1; k <= n; ++k)
    {
        for (const auto &p : projector_series(spectra, k))
        {
            worst_idem = std::max(worst_idem, (p * p - p).norm());
            worst_trace = std::max(worst_trace, std::abs(p.trace() - k));
        }
        const auto mp = mean_projector(spectra, k);
        worst_mean_trace = std::max(worst_mean_trace, std::abs(mp.matrix.trace() - k));
        const auto fi = fluctuation_index(mp);
        gamma_in_range = gamma_in_range && fi.gamma >= -1e-12 && fi.gamma <= fi.gamma_max + 1e-9;
    }

    // Static series: one fixed basis at every date.
    SpectrumSeries fixed;
    fixed.dates = testing::day_labels(t);
    fixed.values = spectra.values;
    fixed.vectors.assign(t, gen.orthonormal(n));
    double worst_static = 0.0;
    for (int k : {1, 5, 29})
        worst_static = std::max(worst_static, std::abs(fluctuation_index(mean_projector(fixed, k)).gamma));

    // Alternating orthogonal rank-1 projectors: e1/e2 with N=2, and a full cycle of N=30 directions.
    double worst_alt = 0.0;
    {
        SpectrumSeries alt;
        alt.dates = testing::day_labels(t);
        alt.values = Eigen::MatrixXd(t, 2);
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
        Eigen::MatrixXd swapped(2, 2);
        swapped << 0, 1, 1, 0;
        for (int i = 0; i < t; ++i)
        {
            alt.values.row(i) << 2.0, 1.0;
            alt.vectors.push_back(i % 2 == 0 ? id : swapped);
        }
        const auto fi = fluctuation_index(mean_projector(alt, 1));
        worst_alt = std::max(worst_alt, std::abs(fi.gamma - fi.gamma_max));

        const Eigen::MatrixXd q = gen.orthonormal(n);
        SpectrumSeries cycle;
        cycle.dates = testing::day_labels(2 * n);
        cycle.values = spectra.values.topRows(1).replicate(2 * n, 1);
        for (int i = 0; i < 2 * n; ++i)
        {
            Eigen::MatrixXd basis(n, n);
            for (int j = 0; j < n; ++j)
                basis.col(j) = q.col((i + j) % n);
            cycle.vectors.push_back(basis);
        }
        const auto fc = fluctuation_index(mean_projector(cycle, 1));
        worst_alt = std::max(worst_alt, std::abs(fc.gamma - fc.gamma_max));
    }

    const bool pass = worst_idem <= 1e-10 && worst_trace <= 1e-10 && worst_mean_trace <= 1e-9 && gamma_in_range &&
                      worst_static < 1e-10 && worst_alt <= 1e-10;
    return {pass, fmt::format("idempotence {:.2e}, trace {:.2e} (<= 1e-10); mean trace {:.2e} (<= 1e-9); "
                              "gamma in range: {}; static gamma {:.2e} (< 1e-10); alternating |gamma-gamma_max| "
                              "{:.2e} (<= 1e-10)",
                              worst_idem, worst_trace, worst_mean_trace, gamma_in_range ? "yes" : "no", worst_static,
                              worst_alt)};
}

// --- 6: spectrum shape round trip ------------------------------------------

Outcome criterion_6()
{
    const int n = 100;
    const double eps_mid = 1e-4;
    double worst_param = 0.0, worst_dos = 0.0;
    for (auto [a, b] : {std::pair{6.0, 1.05}, std::pair{10.0, 1.2}, std::pair{14.0, 1.4}})
    {
        std::vector<double> spec;
        for (int alpha = 1; alpha <= n; ++alpha)
        {
            const double x = 0.5 - static_cast<double>(alpha) / n;
            spec.push_back(eps_mid * std::exp(a * x / (1.0 - std::pow(2.0 * x / b, 4))));
        }
        const auto fit = fit_ansatz(spec);
        worst_param = std::max({worst_param, std::abs(fit.a - a) / a, std::abs(fit.b - b) / b,
                                std::abs(fit.eps_mid - eps_mid) / eps_mid});

        std::vector<double> grid;
        for (double x = -0.1; x <= 0.1 + 1e-12; x += 0.01)
            grid.push_back(ansatz_value(fit, n * (0.5 - x)));
        const auto dos = density_of_states_curve(fit, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            if (!dos.values[i])
                return {false, "density of states undefined inside the fitted range"};
            const double leading = 1.0 / (fit.a * grid[i]);
            worst_dos = std::max(worst_dos, std::abs(*dos.values[i] / leading - 1.0));
        }
    }
    return {worst_param <= 1e-6 && worst_dos < 0.01,
            fmt::format("max relative parameter error {:.2e} (<= 1e-6); max |rho*a*eps - 1| for |x|<=0.1 {:.4f} "
                        "(< 0.01)",
                        worst_param, worst_dos)};
}

// --- 7: exponential decay of the long-memory spectrum ----------------------

Outcome criterion_7()
{
    const int n = 260;
    const auto kernel = build_kernel({KernelScheme::LongMemory, 260, 0.94, 1560});
    const auto returns = generate_returns({EnsembleKind::OneFactor, n, 260 + 199, 5.0, 0.5, 707});
    const auto spectra = spectrum_series(rolling_covariance(returns, kernel), false);
    const auto mean = log_mean_spectrum(spectra);

    // Ordinary least squares of ln(eps) on the rank over the central half.
    const int first = n / 4 + 1, last = n - n / 4;
    std::vector<double> xs, ys;
    for (int alpha = first; alpha <= last; ++alpha)
    {
        const auto &v = mean.values[static_cast<std::size_t>(alpha - 1)];
        if (!v)
            return {false, fmt::format("rank {} undefined in the log mean spectrum", alpha)};
        xs.push_back(alpha);
        ys.push_back(std::log(*v));
    }
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = sxy * sxy / (sxx * syy);
    return {r2 > 0.95 && slope < 0.0, fmt::format("{} dates, ranks {}..{}: slope {:.4f}, R^2 = {:.4f} (> 0.95)",
                                                  spectra.n_dates(), first, last, slope, r2)};
}

// --- 8: window-overlap lagged correlation ------------------------------------

Outcome criterion_8()
{
    const auto returns = generate_returns({EnsembleKind::GaussianIid, 10, 2000 + 20, 5.0, 0.0, 808});
    const auto series = rolling_covariance(returns, rectangular(21));
    if (series.size() != 2000)
        return {false, fmt::format("series length {} != 2000", series.size())};
    const std::vector<int> lags{1, 5, 10, 20, 30};
    const auto rho = matrix_lagged_correlation(series, lags);
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < lags.size(); ++i)
    {
        const double expected = lags[i] < 21 ? (21.0 - lags[i]) / 21.0 : 0.0;
        const bool ok = std::abs(rho[i] - expected) < 0.1;
        pass = pass && ok;
        detail += fmt::format("{}rho({})={:.3f} vs {:.3f}", detail.empty() ? "" : ", ", lags[i], rho[i], expected);
    }
    return {pass, detail + " (tolerance 0.1)"};
}

// --- 9: one-factor leading eigenvalue ----------------------------------------

Outcome criterion_9()
{
    const EnsembleSpec spec{EnsembleKind::OneFactor, 50, 2000, 5.0, 0.5, 909};
    const auto returns = generate_returns(spec);
    const auto spectra = spectrum_series(to_correlation(rolling_covariance(returns, rectangular(260))), false);
    audit.check(spectra);
    const double mean_top = spectra.values.col(0).mean();
    const double oracle = top_eigenvalue_oracle(spec);
    const double rel = std::abs(mean_top / oracle - 1.0);
    return {rel < 0.1, fmt::format("mean top eigenvalue {:.4f} over {} dates vs {:.2f}: relative error {:.4f} (< 0.1)",
                                   mean_top, spectra.n_dates(), oracle, rel)};
}

// --- 10: CLI determinism -------------------------------------------------------

std::string slurp(const std::filesystem::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome criterion_10()
{
    const auto dir = testing::scratch_dir("acceptance_cli");
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "ensemble.kind = one-factor\n"
               "ensemble.n_assets = 30\n"
               "ensemble.n_dates = 700\n"
               "ensemble.beta = 0.4\n"
               "analysis.flavor = correlation\n"
               "analysis.spectrum = true\n"
               "analysis.density = true\n"
               "analysis.mp_compare = true\n"
               "analysis.ansatz = true\n"
               "analysis.projectors = 1,3,10\n"
               "analysis.fluctuation = true\n"
               "analysis.lagged = 0,1,5,10,21,30\n";
    }
    const std::vector<std::pair<std::string, unsigned>> runs{{"t1", 1}, {"t3", 3}, {"t1b", 1}, {"t4", 4}};
    for (const auto &[name, threads] : runs)
    {
        const std::string cmd = fmt::format("\"{}\" analyze \"{}\" --out \"{}\" --threads {} --seed 17 > \"{}\" 2>&1",
                                            COVSPEC_CLI_PATH, (dir / "run.cfg").string(), (dir / name).string(),
                                            threads, (dir / (name + ".log")).string());
        if (std::system(cmd.c_str()) != 0)
            return {false, fmt::format("analyze exited non-zero for --threads {}: {}", threads,
                                       slurp(dir / (name + ".log")))};
    }
    std::size_t compared = 0;
    for (const auto &entry : std::filesystem::directory_iterator(dir / "t1"))
    {
        if (entry.path().extension() != ".csv")
            continue;
        const auto reference = slurp(entry.path());
        for (const auto &[name, threads] : runs)
        {
            const auto other = dir / name / entry.path().filename();
            if (!std::filesystem::exists(other) || slurp(other) != reference)
                return {false, fmt::format("{} differs for --threads {}", entry.path().filename().string(), threads)};
        }
        ++compared;
    }
    return {compared >= 8, fmt::format("{} CSV files byte-identical across --threads 1, 3, 1, 4", compared)};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"M-P convergence", criterion_1},
        {"M-P support edges", criterion_2},
        {"Correlation spectrum constraints", criterion_3},
        {"Eigen contract", criterion_4},
        {"Projector suite", criterion_5},
        {"Spectrum shape round trip", criterion_6},
        {"Exponential spectrum decay", criterion_7},
        {"Window-overlap lagged correlation", criterion_8},
        {"One-factor leading eigenvalue", criterion_9},
        {"Determinism", criterion_10},
    };
    // Criterion 3 audits every correlation matrix, so it runs after the others.
    const std::vector<std::size_t> order{0, 1, 3, 4, 5, 6, 7, 8, 9, 2};
    std::vector<Outcome> outcomes(criteria.size());
    for (std::size_t i : order)
    {
        const auto start = std::chrono::steady_clock::now();
        try
        {
            outcomes[i] = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            outcomes[i] = {false, std::string("exception: ") + e.what()};
        }
        outcomes[i].detail += fmt::format(" [{:.1f} s]", seconds_since(start));
    }
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        std::printf("%s %2zu %s: %s\n", outcomes[i].pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    outcomes[i].detail.c_str());
        failures += outcomes[i].pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
