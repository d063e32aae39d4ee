#include "dlab/geometry/pca.hpp"

#include <Eigen/Eigenvalues>

namespace dlab {

namespace {

PrincipalComponents from_covariance(const VectorXd& mean, const MatrixXd& cov)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
    PrincipalComponents pcs;
    pcs.mean = mean;
    pcs.variances = eig.eigenvalues().reverse();
    pcs.components = eig.eigenvectors().rowwise().reverse();
    const double top = pcs.variances.size() > 0 ? pcs.variances(0) : 0.0;
    pcs.rank = 0;
    for (Eigen::Index j = 0; j < pcs.variances.size(); ++j)
        if (top > 0.0 && pcs.variances(j) > 1e-12 * top) ++pcs.rank;
    return pcs;
}

}  // namespace

PrincipalComponents principal_components(const ActivationShard& data)
{
    require(data.n_tokens() >= 2, "PCA needs at least two rows");
    if (!data.values.allFinite()) throw NumericError("PCA input contains non-finite values");
    const Eigen::Index d = data.d_model();
    constexpr Eigen::Index kChunk = 4096;

    VectorXd mean = VectorXd::Zero(d);
    for (Eigen::Index s = 0; s < data.n_tokens(); s += kChunk) {
        const Eigen::Index rows = std::min(kChunk, data.n_tokens() - s);
        mean += data.values.middleRows(s, rows).cast<double>().colwise().sum().transpose();
    }
    mean /= static_cast<double>(data.n_tokens());

    MatrixXd cov = MatrixXd::Zero(d, d);
    for (Eigen::Index s = 0; s < data.n_tokens(); s += kChunk) {
        const Eigen::Index rows = std::min(kChunk, data.n_tokens() - s);
        MatrixXd centred = data.values.middleRows(s, rows).cast<double>();
        centred.rowwise() -= mean.transpose();
        cov.noalias() += centred.transpose() * centred;
    }
    cov /= static_cast<double>(data.n_tokens() - 1);
    return from_covariance(mean, cov);
}

PrincipalComponents principal_components(const MatrixXd& rows)
{
    require(rows.rows() >= 2, "PCA needs at least two rows");
    const VectorXd mean = rows.colwise().mean().transpose();
    MatrixXd centred = rows;
    centred.rowwise() -= mean.transpose();
    const MatrixXd cov = centred.transpose() * centred / static_cast<double>(rows.rows() - 1);
    return from_covariance(mean, cov);
}

PcaAlignment pca_alignment(const MatrixXd& w_dec, const PrincipalComponents& pcs, Eigen::Index m)
{
    require(w_dec.rows() == pcs.components.rows(), "PCA alignment: decoder width must equal d_model");
    require(m >= 1 && m <= w_dec.rows(), "PCA alignment: m must lie in [1, d_model]");
    PcaAlignment out;
    out.used_components = std::min<Eigen::Index>(m, pcs.rank);
    out.rank_deficient = pcs.rank < m;
    out.pc1_cos = VectorXd::Zero(w_dec.cols());
    out.topm_fraction = VectorXd::Zero(w_dec.cols());
    if (pcs.rank == 0) return out;

    const VectorXd pc1 = pcs.components.col(0);
    const MatrixXd top = pcs.components.leftCols(out.used_components);
    for (Eigen::Index i = 0; i < w_dec.cols(); ++i) {
        const double n = w_dec.col(i).norm();
        if (n == 0.0) continue;
        const VectorXd unit = w_dec.col(i) / n;
        out.pc1_cos(i) = std::min(1.0, std::abs(unit.dot(pc1)));
        out.topm_fraction(i) = std::min(1.0, (top.transpose() * unit).norm());
    }
    return out;
}

}  // namespace dlab
