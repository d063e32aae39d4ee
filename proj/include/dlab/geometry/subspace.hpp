#pragma once

#include "dlab/common.hpp"

#include <vector>

namespace dlab {

// Orthonormal basis for span(columns) by QR with column pivoting on the
// unit-normalised columns; pivots with residual norm below drop_tol are
// discarded, so the result has the numerical rank as its column count.
MatrixXd orthonormal_basis(const MatrixXd& columns, double drop_tol = 1e-8);

struct DenseSubspace {
    MatrixXd basis;                    // d_model x rank
    std::vector<Eigen::Index> latents; // latents with density > threshold
};

// Throws ValidationError when no latent exceeds the threshold.
DenseSubspace dense_subspace_basis(const MatrixXd& w_dec, const VectorXd& densities, double threshold);

struct PrincipalAngles {
    std::vector<double> degrees;  // ascending, min(rank_a, rank_b) entries
    double median = 0.0;
};

// Angles from the singular values of Q_a^T Q_b (clamped to [0, 1]).
PrincipalAngles principal_angles(const MatrixXd& qa, const MatrixXd& qb);

double median(std::vector<double> values);

}  // namespace dlab
