#include "dlab/geometry/subspace.hpp"

#include "dlab/geometry/jacobi_svd.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dlab {

MatrixXd orthonormal_basis(const MatrixXd& columns, double drop_tol)
{
    MatrixXd unit(columns.rows(), columns.cols());
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        const double n = columns.col(j).norm();
        if (n > drop_tol) unit.col(kept++) = columns.col(j) / n;
    }
    unit.conservativeResize(Eigen::NoChange, kept);
    if (kept == 0) return MatrixXd(columns.rows(), 0);

    Eigen::ColPivHouseholderQR<MatrixXd> qr(unit);
    const auto& r = qr.matrixR();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < std::min(r.rows(), r.cols()); ++i)
        if (std::abs(r(i, i)) >= drop_tol) ++rank;
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(columns.rows(), rank);
    return q;
}

DenseSubspace dense_subspace_basis(const MatrixXd& w_dec, const VectorXd& densities, double threshold)
{
    require(densities.size() == w_dec.cols(), "density vector length must equal d_sae");
    DenseSubspace out;
    for (Eigen::Index i = 0; i < densities.size(); ++i)
        if (densities(i) > threshold) out.latents.push_back(i);
    require(!out.latents.empty(), "no latent has density above " + std::to_string(threshold));
    MatrixXd cols(w_dec.rows(), static_cast<Eigen::Index>(out.latents.size()));
    for (std::size_t j = 0; j < out.latents.size(); ++j) cols.col(static_cast<Eigen::Index>(j)) = w_dec.col(out.latents[j]);
    out.basis = orthonormal_basis(cols);
    return out;
}

double median(std::vector<double> values)
{
    require(!values.empty(), "median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

PrincipalAngles principal_angles(const MatrixXd& qa, const MatrixXd& qb)
{
    require(qa.cols() >= 1 && qb.cols() >= 1, "principal angles need nonempty bases");
    require(qa.rows() == qb.rows(), "principal angles: bases live in different spaces");
    const MatrixXd cross = qa.transpose() * qb;
    const auto svd = jacobi_svd(cross, /*want_u=*/false);

    PrincipalAngles out;
    const Eigen::Index count = std::min(qa.cols(), qb.cols());
    out.degrees.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
        const double s = std::clamp(svd.singular(i), 0.0, 1.0);
        out.degrees.push_back(std::acos(s) * 180.0 / std::numbers::pi);
    }
    std::sort(out.degrees.begin(), out.degrees.end());
    out.median = median(out.degrees);
    return out;
}

}  // namespace dlab
