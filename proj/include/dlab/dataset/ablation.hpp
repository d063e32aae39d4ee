#pragma once

#include "dlab/common.hpp"
#include "dlab/dataset/shard.hpp"

namespace dlab {

// x' = x - Q Q^T x for every row. Q must be d_model x r with orthonormal
// columns (Q^T Q = I within 1e-6); r = 0 is the identity.
ActivationShard ablate_subspace(const ActivationShard& shard, const MatrixXd& basis);

// Expression-level form, rows of `rows` are activations.
template <typename Derived>
Matrix<typename Derived::Scalar> project_out_rows(const Eigen::MatrixBase<Derived>& rows,
                                                  const MatrixXd& basis)
{
    using Scalar = typename Derived::Scalar;
    const Matrix<double> x = rows.template cast<double>();
    return (x - (x * basis) * basis.transpose()).template cast<Scalar>();
}

void check_orthonormal(const MatrixXd& basis, double tol = 1e-6);

}  // namespace dlab
