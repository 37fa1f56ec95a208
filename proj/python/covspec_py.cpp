#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "covspec/ensembles.hpp"
#include "covspec/error.hpp"
#include "covspec/kernel.hpp"
#include "covspec/moments.hpp"
#include "covspec/panel.hpp"
#include "covspec/spectral.hpp"
#include "covspec/subspace.hpp"

namespace py = pybind11;
using namespace covspec;

PYBIND11_MODULE(_covspec, m)
{
    m.doc() = "Spectral and subspace diagnostics of rolling covariance matrices";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    py::enum_<AssetClass>(m, "AssetClass")
        .value("LOG_PRICE", AssetClass::LogPrice)
        .value("INTEREST_RATE", AssetClass::InterestRate);
    py::enum_<MissingPolicy>(m, "MissingPolicy")
        .value("REJECT", MissingPolicy::Reject)
        .value("FORWARD_FILL", MissingPolicy::ForwardFill);
    py::enum_<KernelScheme>(m, "KernelScheme")
        .value("RECTANGULAR", KernelScheme::Rectangular)
        .value("EXPONENTIAL", KernelScheme::Exponential)
        .value("LONG_MEMORY", KernelScheme::LongMemory);
    py::enum_<MatrixFlavor>(m, "MatrixFlavor")
        .value("COVARIANCE", MatrixFlavor::Covariance)
        .value("CORRELATION", MatrixFlavor::Correlation);
    py::enum_<BinScale>(m, "BinScale").value("LINEAR", BinScale::Linear).value("LOG", BinScale::Logarithmic);
    py::enum_<EnsembleKind>(m, "EnsembleKind")
        .value("GAUSSIAN_IID", EnsembleKind::GaussianIid)
        .value("STUDENT_IID", EnsembleKind::StudentIid)
        .value("ONE_FACTOR", EnsembleKind::OneFactor);

    // panel-ingest
    py::class_<AssetSpec>(m, "AssetSpec")
        .def(py::init([](std::string id, AssetClass cls, double r0) { return AssetSpec{std::move(id), cls, r0}; }),
             py::arg("id"), py::arg("asset_class") = AssetClass::LogPrice, py::arg("rate_scale") = 0.04)
        .def_readwrite("id", &AssetSpec::id)
        .def_readwrite("asset_class", &AssetSpec::asset_class)
        .def_readwrite("rate_scale", &AssetSpec::rate_scale);
    py::class_<ProvenanceEntry>(m, "ProvenanceEntry")
        .def_readonly("date", &ProvenanceEntry::date)
        .def_readonly("asset", &ProvenanceEntry::asset)
        .def_readonly("action", &ProvenanceEntry::action);
    py::class_<IngestConfig>(m, "IngestConfig")
        .def(py::init<>())
        .def_readwrite("assets", &IngestConfig::assets)
        .def_readwrite("missing", &IngestConfig::missing);
    py::class_<PricePanel>(m, "PricePanel")
        .def_readonly("assets", &PricePanel::assets)
        .def_readonly("dates", &PricePanel::dates)
        .def_readonly("values", &PricePanel::values)
        .def_readonly("mapped", &PricePanel::mapped)
        .def_readonly("provenance", &PricePanel::provenance);
    py::class_<ReturnPanel>(m, "ReturnPanel")
        .def(py::init([](Eigen::MatrixXd returns) {
                 ReturnPanel p;
                 for (Eigen::Index a = 0; a < returns.rows(); ++a)
                     p.assets.push_back({"A" + std::to_string(a), AssetClass::LogPrice, 0.04});
                 for (Eigen::Index t = 0; t < returns.cols(); ++t)
                     p.dates.push_back("t" + std::to_string(100000 + t));
                 p.returns = std::move(returns);
                 return p;
             }),
             py::arg("returns"), "Wrap an N x T return matrix with generated asset ids and ordered date labels.")
        .def_readonly("assets", &ReturnPanel::assets)
        .def_readonly("dates", &ReturnPanel::dates)
        .def_readonly("returns", &ReturnPanel::returns);
    m.def("load_panel", &load_panel, py::arg("path"), py::arg("config") = IngestConfig{});
    m.def("map_prices", &map_prices, py::arg("panel"));
    m.def("compute_returns", &compute_returns, py::arg("mapped"));

    // kernel
    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init([](KernelScheme scheme, int length, double mu, double tau0) {
                 return KernelSpec{scheme, length, mu, tau0};
             }),
             py::arg("scheme") = KernelScheme::LongMemory, py::arg("length") = 260, py::arg("mu") = 0.94,
             py::arg("tau0_days") = 1560.0)
        .def_readwrite("scheme", &KernelSpec::scheme)
        .def_readwrite("length", &KernelSpec::length)
        .def_readwrite("mu", &KernelSpec::mu)
        .def_readwrite("tau0_days", &KernelSpec::tau0_days);
    py::class_<WeightKernel>(m, "WeightKernel")
        .def_readonly("spec", &WeightKernel::spec)
        .def_readonly("weights", &WeightKernel::weights)
        .def_readonly("warnings", &WeightKernel::warnings);
    m.def("build_kernel", &build_kernel, py::arg("spec"));
    m.def("effective_length", &effective_length, py::arg("kernel"));

    // moments
    py::class_<CovarianceSeries>(m, "CovarianceSeries")
        .def_readonly("flavor", &CovarianceSeries::flavor)
        .def_readonly("assets", &CovarianceSeries::assets)
        .def_readonly("dates", &CovarianceSeries::dates)
        .def_readonly("matrices", &CovarianceSeries::matrices)
        .def("__len__", &CovarianceSeries::size);
    m.def(
        "rolling_covariance",
        [](const ReturnPanel &r, const WeightKernel &k, unsigned threads) {
            return rolling_covariance(r, k, DateRange{}, RollingOptions{UpdateMethod::Auto, threads});
        },
        py::arg("returns"), py::arg("kernel"), py::arg("threads") = 1);
    m.def(
        "to_correlation",
        [](const CovarianceSeries &s, double floor) { return to_correlation(s, floor); }, py::arg("series"),
        py::arg("variance_floor") = 1e-16);

    // spectral
    py::class_<EigenSystem>(m, "EigenSystem")
        .def_readonly("values", &EigenSystem::values)
        .def_readonly("vectors", &EigenSystem::vectors);
    m.def("eigendecompose", &eigendecompose, py::arg("matrix"), py::arg("symmetry_tol") = 1e-10);
    py::class_<SpectrumSeries>(m, "SpectrumSeries")
        .def_readonly("flavor", &SpectrumSeries::flavor)
        .def_readonly("dates", &SpectrumSeries::dates)
        .def_readonly("values", &SpectrumSeries::values)
        .def_property_readonly("has_vectors", &SpectrumSeries::has_vectors);
    m.def("spectrum_series", &spectrum_series, py::arg("series"), py::arg("store_vectors") = false,
          py::arg("threads") = 1);
    py::class_<MeanSpectrum>(m, "MeanSpectrum")
        .def_readonly("values", &MeanSpectrum::values)
        .def_readonly("inclusion_counts", &MeanSpectrum::inclusion_counts);
    m.def(
        "log_mean_spectrum",
        [](const SpectrumSeries &s, double floor, bool relative) { return log_mean_spectrum(s, {floor, relative}); },
        py::arg("series"), py::arg("floor") = 1e-12, py::arg("relative") = true);
    py::class_<Binning>(m, "Binning")
        .def(py::init([](BinScale scale, double lower, double upper, int bins) {
                 return Binning{scale, lower, upper, bins};
             }),
             py::arg("scale") = BinScale::Linear, py::arg("lower") = 0.0, py::arg("upper") = 1.0,
             py::arg("bins") = 60)
        .def_readwrite("scale", &Binning::scale)
        .def_readwrite("lower", &Binning::lower)
        .def_readwrite("upper", &Binning::upper)
        .def_readwrite("bins", &Binning::bins);
    py::class_<DensityHistogram>(m, "DensityHistogram")
        .def_readonly("centers", &DensityHistogram::centers)
        .def_readonly("widths", &DensityHistogram::widths)
        .def_readonly("densities", &DensityHistogram::densities)
        .def_readonly("excluded", &DensityHistogram::excluded)
        .def_readonly("total", &DensityHistogram::total)
        .def_property_readonly("included_fraction", &DensityHistogram::included_fraction);
    m.def("spectral_density", &spectral_density, py::arg("series"), py::arg("binning"));
    m.def("default_binning", &default_binning, py::arg("series"), py::arg("bins") = 60,
          py::arg("scale") = std::nullopt);
    m.def("mp_density", &mp_density, py::arg("lam"), py::arg("q"));
    m.def("mp_support", &mp_support, py::arg("q"));
    m.def("fit_mp_ratio", &fit_mp_ratio, py::arg("hist"));

    py::class_<AnsatzFit>(m, "AnsatzFit")
        .def_readonly("a", &AnsatzFit::a)
        .def_readonly("b", &AnsatzFit::b)
        .def_readonly("eps_mid", &AnsatzFit::eps_mid)
        .def_readonly("rms_residual", &AnsatzFit::rms_residual)
        .def_readonly("n", &AnsatzFit::n)
        .def_readonly("first_rank", &AnsatzFit::first_rank)
        .def_readonly("last_rank", &AnsatzFit::last_rank);
    m.def(
        "fit_ansatz",
        [](const std::vector<double> &spectrum, std::optional<std::pair<int, int>> range) {
            if (range)
                return fit_ansatz(spectrum, RankRange{range->first, range->second});
            return fit_ansatz(spectrum);
        },
        py::arg("spectrum"), py::arg("fit_range") = std::nullopt);
    m.def("ansatz_value", &ansatz_value, py::arg("fit"), py::arg("alpha"));
    m.def(
        "density_of_states_curve",
        [](const AnsatzFit &fit, const std::vector<double> &grid) { return density_of_states_curve(fit, grid).values; },
        py::arg("fit"), py::arg("grid"));

    // subspace
    py::class_<MeanProjector>(m, "MeanProjector")
        .def_readonly("k", &MeanProjector::k)
        .def_readonly("matrix", &MeanProjector::matrix)
        .def_readonly("samples", &MeanProjector::samples);
    m.def(
        "leading_projector", [](const EigenSystem &eig, int k) { return leading_projector(eig, k).matrix; },
        py::arg("eig"), py::arg("k"));
    m.def("mean_projector", &mean_projector, py::arg("series"), py::arg("k"), py::arg("threads") = 1);
    m.def("projector_spectrum", &projector_spectrum, py::arg("mean_projector"));
    m.def(
        "fluctuation_index",
        [](const MeanProjector &mp) {
            const auto fi = fluctuation_index(mp);
            return py::make_tuple(fi.gamma, fi.gamma_max, fi.ratio);
        },
        py::arg("mean_projector"));
    m.def(
        "matrix_lagged_correlation",
        [](const std::vector<Eigen::MatrixXd> &series, const std::vector<int> &lags) {
            return matrix_lagged_correlation(series, lags);
        },
        py::arg("series"), py::arg("lags"));

    // ensembles
    py::class_<EnsembleSpec>(m, "EnsembleSpec")
        .def(py::init([](EnsembleKind kind, int n, int t, double nu, double beta, std::uint64_t seed) {
                 return EnsembleSpec{kind, n, t, nu, beta, seed};
             }),
             py::arg("kind") = EnsembleKind::GaussianIid, py::arg("n_assets") = 10, py::arg("n_dates") = 500,
             py::arg("nu") = 5.0, py::arg("beta") = 0.0, py::arg("seed") = 42)
        .def_readwrite("kind", &EnsembleSpec::kind)
        .def_readwrite("n_assets", &EnsembleSpec::n_assets)
        .def_readwrite("n_dates", &EnsembleSpec::n_dates)
        .def_readwrite("nu", &EnsembleSpec::nu)
        .def_readwrite("beta", &EnsembleSpec::beta)
        .def_readwrite("seed", &EnsembleSpec::seed);
    m.def("generate_returns", &generate_returns, py::arg("spec"), py::arg("threads") = 1);
    m.def("top_eigenvalue_oracle", &top_eigenvalue_oracle, py::arg("spec"));
}
