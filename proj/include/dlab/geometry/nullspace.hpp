#pragma once

#include "dlab/common.hpp"
#include "dlab/geometry/jacobi_svd.hpp"
#include "dlab/geometry/unembedding.hpp"
#include "dlab/sae/model.hpp"

namespace dlab {

// Complete left singular basis of W_U (d_model x d_model), columns ordered
// by descending singular value. Vocabularies narrower than d_model are
// zero-padded so the trailing directions are still defined.
struct LeftSingularBasis {
    MatrixXd u;
    VectorXd singular;  // length d_model, descending (zeros for padding)

    // Last k columns: span{U_{-k}, ..., U_{-1}}.
    MatrixXd trailing(Eigen::Index k) const
    {
        require(k >= 1 && k <= u.cols(), "trailing subspace size must lie in [1, d_model]");
        return u.rightCols(k);
    }
};

template <typename Derived>
LeftSingularBasis left_singular_basis(const Eigen::MatrixBase<Derived>& w_u)
{
    const Eigen::Index d = w_u.rows();
    MatrixXd tall;
    if (w_u.cols() >= d) {
        tall = w_u.transpose().template cast<double>();
    } else {
        tall = MatrixXd::Zero(d, d);
        tall.topRows(w_u.cols()) = w_u.transpose().template cast<double>();
    }
    auto svd = jacobi_svd(tall, /*want_u=*/false);
    return {std::move(svd.v), std::move(svd.singular)};
}

inline LeftSingularBasis left_singular_basis(const Unembedding& u)
{
    u.validate();
    return left_singular_basis(u.w_u);
}

// alpha_k(i) = ||P w_i|| / ||w_i|| with P the projector onto `trailing`
// (orthonormal columns) and w_i the encoder row of latent i. Zero rows give 0.
template <typename Derived>
VectorXd nullspace_alignment(const Eigen::MatrixBase<Derived>& w_enc, const MatrixXd& trailing)
{
    require(w_enc.cols() == trailing.rows(), "nullspace alignment: encoder width must equal d_model");
    const MatrixXd w = w_enc.template cast<double>();
    const MatrixXd coords = w * trailing;  // d_sae x k
    VectorXd out(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double n = w.row(i).norm();
        out(i) = n > 0.0 ? std::min(1.0, coords.row(i).norm() / n) : 0.0;
    }
    return out;
}

// The literal signed form sum_j U_{-j}^T w / ||w||; not a norm fraction and
// may be negative. Kept for comparison only.
template <typename Derived>
VectorXd nullspace_alignment_signed_sum(const Eigen::MatrixBase<Derived>& w_enc, const MatrixXd& trailing)
{
    require(w_enc.cols() == trailing.rows(), "nullspace alignment: encoder width must equal d_model");
    const MatrixXd w = w_enc.template cast<double>();
    const MatrixXd coords = w * trailing;
    VectorXd out(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double n = w.row(i).norm();
        out(i) = n > 0.0 ? coords.row(i).sum() / n : 0.0;
    }
    return out;
}

template <typename Scalar>
VectorXd nullspace_alignment(const SaeModel<Scalar>& model, const Unembedding& u, Eigen::Index k)
{
    require(u.d_model() == model.d_model(), "unembedding d_model must match the SAE");
    return nullspace_alignment(model.w_enc, left_singular_basis(u).trailing(k));
}

}  // namespace dlab
