#pragma once

#include "dlab/dataset/shard.hpp"
#include "dlab/dataset/boundaries.hpp"
#include "dlab/sae/model.hpp"

#include <span>
#include <vector>

namespace dlab {

struct PositionScores {
    VectorXd rho;                  // NaN for latents not scored
    std::vector<bool> degenerate;  // constant projection or distance
};

// Spearman correlation between the projection of each token's activation
// onto the unit decoder direction and the token's distance to `boundary`.
// `latents` restricts scoring to a subset; empty means all latents.
PositionScores position_scores(const MatrixXd& w_dec, const ActivationShard& shard,
                               const std::vector<TokenMetadata>& metadata, BoundaryKind boundary,
                               std::span<const Eigen::Index> latents = {});

template <typename Scalar>
PositionScores position_scores(const SaeModel<Scalar>& model, const ActivationShard& shard,
                               const std::vector<TokenMetadata>& metadata, BoundaryKind boundary,
                               std::span<const Eigen::Index> latents = {})
{
    return position_scores(model.w_dec.template cast<double>(), shard, metadata, boundary, latents);
}

}  // namespace dlab
