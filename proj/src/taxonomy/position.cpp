#include "dlab/taxonomy/position.hpp"

#include "dlab/geometry/similarity.hpp"
#include "dlab/taxonomy/rank_stats.hpp"

#include <limits>
#include <numeric>

namespace dlab {

PositionScores position_scores(const MatrixXd& w_dec, const ActivationShard& shard,
                               const std::vector<TokenMetadata>& metadata, BoundaryKind boundary,
                               std::span<const Eigen::Index> latents)
{
    require(static_cast<std::size_t>(shard.n_tokens()) == metadata.size(), "position scores: shard and metadata are misaligned");
    require(shard.d_model() == w_dec.rows(), "position scores: shard width must equal d_model");

    std::vector<Eigen::Index> subset(latents.begin(), latents.end());
    if (subset.empty()) {
        subset.resize(static_cast<std::size_t>(w_dec.cols()));
        std::iota(subset.begin(), subset.end(), Eigen::Index{0});
    }

    const Eigen::Index n = shard.n_tokens();
    std::vector<double> distance(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) distance[static_cast<std::size_t>(t)] = boundary_distance(metadata[static_cast<std::size_t>(t)], boundary);
    const auto distance_ranks = average_ranks(distance);

    PositionScores out;
    out.rho = VectorXd::Constant(w_dec.cols(), std::numeric_limits<double>::quiet_NaN());
    out.degenerate.assign(static_cast<std::size_t>(w_dec.cols()), false);

    const MatrixXd unit = unit_columns(w_dec);
    constexpr std::size_t kBlock = 16;
    constexpr Eigen::Index kChunk = 8192;
    MatrixXd proj;
    for (std::size_t b0 = 0; b0 < subset.size(); b0 += kBlock) {
        const std::size_t nb = std::min(kBlock, subset.size() - b0);
        MatrixXd dirs(w_dec.rows(), static_cast<Eigen::Index>(nb));
        for (std::size_t j = 0; j < nb; ++j) dirs.col(static_cast<Eigen::Index>(j)) = unit.col(subset[b0 + j]);
        proj.resize(n, static_cast<Eigen::Index>(nb));
        for (Eigen::Index s = 0; s < n; s += kChunk) {
            const Eigen::Index rows = std::min(kChunk, n - s);
            proj.middleRows(s, rows).noalias() = shard.values.middleRows(s, rows).cast<double>() * dirs;
        }
        for (std::size_t j = 0; j < nb; ++j) {
            const Eigen::Index latent = subset[b0 + j];
            const auto col = proj.col(static_cast<Eigen::Index>(j));
            const auto ranks = average_ranks(std::span<const double>(col.data(), static_cast<std::size_t>(n)));
            const auto c = pearson(ranks, distance_ranks);
            out.rho(latent) = c.value;
            out.degenerate[static_cast<std::size_t>(latent)] = c.degenerate;
        }
    }
    return out;
}

}  // namespace dlab
