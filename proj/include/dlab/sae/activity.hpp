#pragma once

#include "dlab/dataset/shard.hpp"
#include "dlab/sae/model.hpp"

#include <span>
#include <vector>

namespace dlab {

// Per requested latent, one flag per token: output nonzero on that token.
// Same notion of "active" as latent_density.
template <typename Scalar>
std::vector<std::vector<bool>> active_tokens(const SaeModel<Scalar>& model, const ActivationShard& data,
                                             std::span<const Eigen::Index> latents)
{
    require(data.d_model() == model.d_model(), "shard width must equal SAE d_model");
    const Eigen::Index n = data.n_tokens();
    std::vector<int> slot(static_cast<std::size_t>(model.d_sae()), -1);
    for (std::size_t j = 0; j < latents.size(); ++j) {
        require(latents[j] >= 0 && latents[j] < model.d_sae(), "latent index out of range");
        slot[static_cast<std::size_t>(latents[j])] = static_cast<int>(j);
    }
    std::vector<std::vector<bool>> out(latents.size(), std::vector<bool>(static_cast<std::size_t>(n), false));

    constexpr Eigen::Index kChunk = 4096;
    for (Eigen::Index s = 0; s < n; s += kChunk) {
        const Eigen::Index rows = std::min(kChunk, n - s);
        const auto codes = encode_rows(model, data.values.middleRows(s, rows));
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (auto i : codes.active[static_cast<std::size_t>(r)]) {
                const int j = slot[static_cast<std::size_t>(i)];
                if (j >= 0 && codes.pre(r, i) != Scalar(0)) out[static_cast<std::size_t>(j)][static_cast<std::size_t>(s + r)] = true;
            }
        }
    }
    return out;
}

}  // namespace dlab
