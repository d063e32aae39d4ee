#include "dlab/dataset/ablation.hpp"

#include <algorithm>

namespace dlab {

void check_orthonormal(const MatrixXd& basis, double tol)
{
    if (basis.cols() == 0) return;
    const MatrixXd gram = basis.transpose() * basis;
    const double err = (gram - MatrixXd::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
    if (!(err <= tol)) throw ValidationError("basis is not orthonormal (max |Q^T Q - I| = " + std::to_string(err) + ")");
}

ActivationShard ablate_subspace(const ActivationShard& shard, const MatrixXd& basis)
{
    require(basis.rows() == shard.d_model(), "ablation basis row count must equal d_model");
    require(basis.cols() <= shard.d_model(), "ablation basis rank exceeds d_model");
    check_orthonormal(basis);

    ActivationShard out = shard;
    if (basis.cols() == 0) return out;

    constexpr Eigen::Index kChunk = 4096;
    for (Eigen::Index start = 0; start < shard.n_tokens(); start += kChunk) {
        const Eigen::Index rows = std::min(kChunk, shard.n_tokens() - start);
        out.values.middleRows(start, rows) = project_out_rows(shard.values.middleRows(start, rows), basis);
    }
    return out;
}

}  // namespace dlab
