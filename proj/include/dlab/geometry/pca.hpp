#pragma once

#include "dlab/common.hpp"
#include "dlab/dataset/shard.hpp"
#include "dlab/sae/model.hpp"

namespace dlab {

struct PrincipalComponents {
    VectorXd mean;
    VectorXd variances;    // descending
    MatrixXd components;   // d_model x d_model, column j is PC j+1
    Eigen::Index rank = 0; // components with variance above 1e-12 * top variance
};

// Eigendecomposition of the 1/(n-1) covariance of mean-centred rows.
PrincipalComponents principal_components(const ActivationShard& data);
PrincipalComponents principal_components(const MatrixXd& rows);

struct PcaAlignment {
    VectorXd pc1_cos;        // |cos(W_dec^(i), PC1)|
    VectorXd topm_fraction;  // ||projection of unit W_dec^(i) onto top-m PCs||
    bool rank_deficient = false;
    Eigen::Index used_components = 0;
};

PcaAlignment pca_alignment(const MatrixXd& w_dec, const PrincipalComponents& pcs, Eigen::Index m);

template <typename Scalar>
PcaAlignment pca_alignment(const SaeModel<Scalar>& model, const ActivationShard& data, Eigen::Index m)
{
    require(data.n_tokens() >= data.d_model(), "PCA alignment needs at least d_model rows");
    return pca_alignment(model.w_dec.template cast<double>(), principal_components(data), m);
}

}  // namespace dlab
