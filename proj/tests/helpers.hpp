#pragma once

#include "dlab/common.hpp"
#include "dlab/dataset/shard.hpp"
#include "dlab/sae/model.hpp"

#include <Eigen/QR>

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <algorithm>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace dlab::test {

inline MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline MatrixXd random_orthonormal(Eigen::Index d, Eigen::Index r, std::mt19937_64& rng)
{
    const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(random_matrix(d, d, rng)).householderQ();
    return q.leftCols(r);
}

inline ActivationShard random_shard(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng)
{
    ActivationShard s;
    s.layer = 3;
    s.hook_point = "resid_post";
    s.values = random_matrix(n, d, rng).cast<float>();
    return s;
}

template <typename Scalar>
SaeModel<Scalar> random_model(Eigen::Index d_model, Eigen::Index d_sae, const Activation<Scalar>& act, std::mt19937_64& rng,
                              double bias_scale = 0.1)
{
    SaeModel<Scalar> m;
    m.w_enc = random_matrix(d_sae, d_model, rng).cast<Scalar>();
    m.w_dec = random_matrix(d_model, d_sae, rng).cast<Scalar>();
    m.b_enc = (bias_scale * random_matrix(d_sae, 1, rng)).cast<Scalar>();
    m.b_dec = (bias_scale * random_matrix(d_model, 1, rng)).cast<Scalar>();
    m.activation = act;
    return m;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("dlab_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Three layers whose dense subspaces are spanned by
//   cos(theta_i) e_i + sin(theta_i) e_{i+3},  i = 0, 1, 2
// for an orthonormal frame e. Each coordinate pair is its own plane, so the
// principal angles between layers a and b are |theta_a,i - theta_b,i|.
struct RotationScenario {
    std::vector<MatrixXd> decoders;
    std::vector<VectorXd> densities;
    std::vector<std::array<double, 3>> thetas;  // degrees
};

inline RotationScenario rotation_scenario(std::mt19937_64& rng, Eigen::Index d_model = 16, Eigen::Index n_dense = 6,
                                          Eigen::Index n_sparse = 20)
{
    RotationScenario s;
    s.thetas = {{0.0, 0.0, 0.0}, {10.0, 20.0, 30.0}, {40.0, 25.0, 75.0}};
    const MatrixXd frame = random_orthonormal(d_model, 6, rng);
    std::uniform_real_distribution<double> low(0.0, 0.05);
    for (const auto& th : s.thetas) {
        MatrixXd basis(d_model, 3);
        for (int i = 0; i < 3; ++i) {
            const double t = th[static_cast<std::size_t>(i)] * std::numbers::pi / 180.0;
            basis.col(i) = std::cos(t) * frame.col(i) + std::sin(t) * frame.col(i + 3);
        }
        MatrixXd dec(d_model, n_dense + n_sparse);
        dec.leftCols(n_dense) = basis * random_matrix(3, n_dense, rng);
        dec.rightCols(n_sparse) = random_matrix(d_model, n_sparse, rng);
        dec.colwise().normalize();
        VectorXd dens(n_dense + n_sparse);
        for (Eigen::Index i = 0; i < dens.size(); ++i) dens(i) = i < n_dense ? 0.2 + low(rng) : low(rng);
        s.decoders.push_back(dec);
        s.densities.push_back(dens);
    }
    return s;
}

inline double analytic_median_angle(const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    std::array<double, 3> d{};
    for (std::size_t i = 0; i < 3; ++i) d[i] = std::abs(a[i] - b[i]);
    std::sort(d.begin(), d.end());
    return d[1];
}

}  // namespace dlab::test
