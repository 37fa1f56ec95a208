#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "covspec/error.hpp"
#include "covspec/spectral.hpp"
#include "support.hpp"

using namespace covspec;

namespace
{

/// Spectrum written out directly from the shape, independent of ansatz_log_value.
std::vector<double> synth(double a, double b, double eps_mid, int n)
{
    std::vector<double> out;
    for (int alpha = 1; alpha <= n; ++alpha)
    {
        const double x = 0.5 - static_cast<double>(alpha) / n;
        const double q = std::pow(2.0 * x / b, 4);
        out.push_back(eps_mid * std::exp(a * x / (1.0 - q)));
    }
    return out;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

} // namespace

TEST_CASE("round trip a=8, b=1.1, eps_mid=1e-4, N=100")
{
    const auto fit = fit_ansatz(synth(8.0, 1.1, 1e-4, 100));
    CHECK(rel(fit.a, 8.0) <= 1e-6);
    CHECK(rel(fit.b, 1.1) <= 1e-6);
    CHECK(rel(fit.eps_mid, 1e-4) <= 1e-6);
    CHECK(fit.rms_residual <= 1e-8);
    CHECK(fit.n == 100);
    CHECK(fit.first_rank == 11);
    CHECK(fit.last_rank == 90);
}

TEST_CASE("fitted curve at the centre returns eps_mid")
{
    const auto fit = fit_ansatz(synth(5.0, 1.3, 2e-3, 64));
    CHECK(ansatz_value(fit, 32.0) == doctest::Approx(fit.eps_mid).epsilon(1e-15));
    CHECK(ansatz_log_value(7.0, 1.2, -3.0, 50, 25.0) == -3.0);
}

TEST_CASE("central slope of ln eps in alpha is -a/N")
{
    const double a = 9.0, b = 1.15, lm = std::log(3e-5);
    const int n = 120;
    const double h = 1e-4;
    const double slope =
        (ansatz_log_value(a, b, lm, n, n / 2.0 + h) - ansatz_log_value(a, b, lm, n, n / 2.0 - h)) / (2.0 * h);
    CHECK(slope == doctest::Approx(-a / n).epsilon(1e-7));
}

TEST_CASE("property: scale equivariance")
{
    testing::Gen gen(61);
    for (int trial = 0; trial < 20; ++trial)
    {
        const double a = gen.uniform(3.0, 15.0);
        const double b = gen.uniform(1.02, 1.6);
        const int n = gen.integer(20, 300);
        std::vector<double> spec = synth(a, b, 1e-3, n);
        for (double &v : spec)
            v *= std::exp(0.01 * gen.normal());
        const double c = std::exp(gen.uniform(-6.0, 6.0));
        std::vector<double> scaled = spec;
        for (double &v : scaled)
            v *= c;
        const auto f1 = fit_ansatz(spec);
        const auto f2 = fit_ansatz(scaled);
        CHECK(f2.log_eps_mid - f1.log_eps_mid == doctest::Approx(std::log(c)).epsilon(1e-8));
        CHECK(rel(f2.a, f1.a) <= 1e-7);
        CHECK(rel(f2.b, f1.b) <= 1e-7);
        CHECK(f1.a > 0.0);
        CHECK(f1.b > 2.0 * std::abs(0.5 - static_cast<double>(f1.first_rank) / n));
    }
}

TEST_CASE("noisy spectrum reports its residual")
{
    testing::Gen gen(62);
    auto spec = synth(10.0, 1.2, 1e-4, 200);
    for (double &v : spec)
        v *= std::exp(0.05 * gen.normal());
    const auto fit = fit_ansatz(spec);
    CHECK(fit.a == doctest::Approx(10.0).epsilon(0.05));
    CHECK(fit.rms_residual == doctest::Approx(0.05).epsilon(0.2));
}

TEST_CASE("fit from a mean spectrum with undefined ranks")
{
    MeanSpectrum m;
    const auto spec = synth(6.0, 1.1, 1e-2, 40);
    for (double v : spec)
        m.values.emplace_back(v);
    m.values.back().reset();
    m.inclusion_counts.assign(40, 1);
    const auto fit = fit_ansatz(m);
    CHECK(rel(fit.a, 6.0) <= 1e-6);
    CHECK_THROWS_AS(fit_ansatz(m, RankRange{1, 40}), ParameterError);
}

TEST_CASE("fit errors")
{
    CHECK_THROWS_AS(fit_ansatz(std::vector<double>(7, 1.0)), ParameterError);
    auto spec = synth(6.0, 1.1, 1e-2, 40);
    spec[20] = 0.0;
    CHECK_THROWS_AS(fit_ansatz(spec), ParameterError);
    CHECK_THROWS_AS(fit_ansatz(synth(6.0, 1.1, 1e-2, 40), RankRange{0, 10}), ParameterError);
    CHECK_THROWS_AS(fit_ansatz(synth(6.0, 1.1, 1e-2, 40), RankRange{5, 41}), ParameterError);

    try
    {
        fit_ansatz(synth(8.0, 1.1, 1e-4, 100), default_fit_range(100), AnsatzOptions{1, 1e-10});
        FAIL("expected ConvergenceError");
    }
    catch (const ConvergenceError &e)
    {
        CHECK(e.best().a > 0.0);
        CHECK(e.best().rms_residual > 0.0);
        CHECK(e.best().iterations == 1);
    }
}

TEST_CASE("density of states: pure exponential limit")
{
    AnsatzFit fit;
    fit.a = 7.0;
    fit.b = 1e6;
    fit.log_eps_mid = std::log(1e-3);
    fit.eps_mid = 1e-3;
    fit.n = 100;
    fit.first_rank = 11;
    fit.last_rank = 90;
    std::vector<double> grid;
    for (int i = 0; i < 30; ++i)
        grid.push_back(1e-3 * std::exp(-2.5 + 5.0 * i / 29.0));
    const auto dos = density_of_states_curve(fit, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        REQUIRE(dos.values[i].has_value());
        CHECK(*dos.values[i] * grid[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-9));
    }
}

TEST_CASE("density of states: a=10 gives 0.1/eps at the centre")
{
    const auto fit = fit_ansatz(synth(10.0, 1.2, 1e-4, 100));
    const auto dos = density_of_states_curve(fit, {fit.eps_mid});
    REQUIRE(dos.values[0].has_value());
    CHECK(*dos.values[0] == doctest::Approx(0.1 / fit.eps_mid).epsilon(1e-6));
}

TEST_CASE("density of states agrees with a finite difference of the shape")
{
    const auto fit = fit_ansatz(synth(8.0, 1.1, 1e-4, 100));
    std::vector<double> alphas, grid;
    for (double alpha = 12.0; alpha <= 89.0; alpha += 3.5)
    {
        alphas.push_back(alpha);
        grid.push_back(ansatz_value(fit, alpha));
    }
    const auto dos = density_of_states_curve(fit, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        const double h = 1e-4;
        const double deps = (ansatz_value(fit, alphas[i] + h) - ansatz_value(fit, alphas[i] - h)) / (2.0 * h);
        const double oracle = -1.0 / (fit.n * deps);
        REQUIRE(dos.values[i].has_value());
        CHECK(rel(*dos.values[i], oracle) <= 1e-6);
    }
}

TEST_CASE("density of states integrates to the fitted index fraction")
{
    using boost::math::quadrature::gauss_kronrod;
    for (auto [a, b] : {std::pair{6.0, 1.05}, std::pair{10.0, 1.2}, std::pair{14.0, 1.4}})
    {
        const auto fit = fit_ansatz(synth(a, b, 1e-4, 100));
        const double lo = ansatz_value(fit, fit.last_rank);
        const double hi = ansatz_value(fit, fit.first_rank);
        // Integrate in u = ln eps so the 1/eps shape is smooth.
        auto integrand = [&](double u) {
            const double eps = std::exp(u);
            const auto v = density_of_states_curve(fit, {eps}).values[0];
            return v ? *v * eps : 0.0;
        };
        const double total = gauss_kronrod<double, 31>::integrate(integrand, std::log(lo) + 1e-12,
                                                                  std::log(hi) - 1e-12, 12, 1e-10);
        const double fraction = static_cast<double>(fit.last_rank - fit.first_rank) / fit.n;
        CHECK(std::abs(total - fraction) <= 1e-3);
    }
}

TEST_CASE("density of states omits points outside the fitted range")
{
    const auto fit = fit_ansatz(synth(8.0, 1.1, 1e-4, 100));
    const double top = ansatz_value(fit, fit.first_rank);
    const double bottom = ansatz_value(fit, fit.last_rank);
    const auto dos = density_of_states_curve(fit, {top * 1.5, bottom * 0.5, -1.0, fit.eps_mid});
    CHECK_FALSE(dos.values[0].has_value());
    CHECK_FALSE(dos.values[1].has_value());
    CHECK_FALSE(dos.values[2].has_value());
    CHECK(dos.values[3].has_value());
}
