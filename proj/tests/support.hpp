#pragma once

// Shared helpers for the test executables: seeded generators and small panels.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covspec/panel.hpp"

namespace testing
{

class Gen
{
public:
    explicit Gen(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols)
    {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                m(i, j) = normal();
        return m;
    }

    Eigen::MatrixXd symmetric(Eigen::Index n)
    {
        const Eigen::MatrixXd g = normal_matrix(n, n);
        return 0.5 * (g + g.transpose());
    }

    /// Random orthonormal basis from the QR factor of a Gaussian matrix.
    Eigen::MatrixXd orthonormal(Eigen::Index n)
    {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(normal_matrix(n, n));
        return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    }

    /// Symmetric matrix with a prescribed, well separated positive spectrum.
    Eigen::MatrixXd with_spectrum(const Eigen::VectorXd &values)
    {
        const Eigen::MatrixXd q = orthonormal(values.size());
        const Eigen::MatrixXd a = q * values.asDiagonal() * q.transpose();
        return 0.5 * (a + a.transpose());
    }

    std::mt19937_64 &engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline std::vector<std::string> day_labels(Eigen::Index count)
{
    std::vector<std::string> out;
    for (Eigen::Index t = 0; t < count; ++t)
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "d%06ld", static_cast<long>(t));
        out.emplace_back(buf);
    }
    return out;
}

inline covspec::ReturnPanel make_returns(const Eigen::MatrixXd &r)
{
    covspec::ReturnPanel p;
    for (Eigen::Index a = 0; a < r.rows(); ++a)
        p.assets.push_back({"S" + std::to_string(a), covspec::AssetClass::LogPrice, 0.04});
    p.dates = day_labels(r.cols());
    p.returns = r;
    return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("covspec_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double rel_fro(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace testing
