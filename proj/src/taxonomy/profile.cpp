#include "dlab/taxonomy/profile.hpp"

#include "dlab/geometry/nullspace.hpp"
#include "dlab/geometry/pca.hpp"
#include "dlab/geometry/similarity.hpp"
#include "dlab/sae/activity.hpp"
#include "dlab/sae/train.hpp"
#include "dlab/taxonomy/position.hpp"
#include "dlab/taxonomy/rank_stats.hpp"

#include <cmath>

namespace dlab {

void ProfileConfig::validate() const
{
    require(nullspace_k >= 1, "nullspace_k must be positive");
    require(pca_components >= 1, "pca_components must be positive");
    require(alphabet_top_n >= 1, "alphabet_top_n must be positive");
    require(token_metric_min_density >= 0.0 && token_metric_min_density <= 1.0, "token_metric_min_density must lie in [0, 1]");
}

ProfileConfig profile_config_from_json(const nlohmann::json& j)
{
    ProfileConfig c;
    c.nullspace_k = j.value("nullspace_k", c.nullspace_k);
    c.pca_components = j.value("pca_components", c.pca_components);
    c.alphabet_top_n = j.value("alphabet_top_n", c.alphabet_top_n);
    c.token_metric_min_density = j.value("token_metric_min_density", c.token_metric_min_density);
    c.validate();
    return c;
}

nlohmann::json to_json(const ProfileConfig& c)
{
    return {{"nullspace_k", c.nullspace_k},
            {"pca_components", c.pca_components},
            {"alphabet_top_n", c.alphabet_top_n},
            {"token_metric_min_density", c.token_metric_min_density}};
}

std::vector<LatentProfile> build_profiles(const ProfileInputs& in, const ProfileConfig& config)
{
    config.validate();
    const auto& model = in.model;
    model.validate();
    require(in.shard.d_model() == model.d_model(), "profiles: shard width must equal SAE d_model");
    require(static_cast<std::size_t>(in.shard.n_tokens()) == in.metadata.size(), "profiles: shard and metadata are misaligned");
    const auto& pos_map = in.pos_map ? *in.pos_map : default_pos_map();

    const Eigen::Index n = model.d_sae();
    std::vector<LatentProfile> out(static_cast<std::size_t>(n));

    const VectorXd density = latent_density(model, in.shard);
    const auto anti = antipodality_scores(model);
    const auto bias = bias_similarity(model);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& p = out[static_cast<std::size_t>(i)];
        p.latent = i;
        p.density = density(i);
        p.antipodality = anti.score(i);
        p.partner = anti.partner(i);
        p.degenerate = anti.degenerate[static_cast<std::size_t>(i)];
        p.bias_cos_abs = bias.abs_cos(i);
    }

    if (in.shard.n_tokens() >= in.shard.d_model()) {
        const auto m = std::min<Eigen::Index>(config.pca_components, model.d_model());
        const auto pca = pca_alignment(model, in.shard, m);
        for (Eigen::Index i = 0; i < n; ++i) {
            out[static_cast<std::size_t>(i)].pc1_cos = pca.pc1_cos(i);
            out[static_cast<std::size_t>(i)].topm_pc_fraction = pca.topm_fraction(i);
        }
    }

    if (in.unembedding) {
        const auto& u = *in.unembedding;
        require(u.d_model() == model.d_model(), "profiles: unembedding d_model must match the SAE");
        const auto k = std::min<Eigen::Index>(config.nullspace_k, model.d_model());
        const VectorXd alpha = nullspace_alignment(model, u, k);
        const auto top_n = static_cast<int>(std::min<Eigen::Index>(config.alphabet_top_n, u.vocab_size()));
        const auto letters = alphabet_scores(model, u, top_n);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& p = out[static_cast<std::size_t>(i)];
            const auto& a = letters[static_cast<std::size_t>(i)];
            p.alpha = alpha(i);
            p.alphabet_letter = a.letter;
            p.alphabet_metric = a.metric;
            p.alphabet_side = a.side;
        }
    }

    std::vector<Eigen::Index> scored;
    for (Eigen::Index i = 0; i < n; ++i)
        if (density(i) > config.token_metric_min_density || config.token_metric_min_density == 0.0) scored.push_back(i);
    if (scored.empty()) return out;

    const auto period = position_scores(model, in.shard, in.metadata, BoundaryKind::period, scored);
    const auto newline = position_scores(model, in.shard, in.metadata, BoundaryKind::newline, scored);
    const auto bos = position_scores(model, in.shard, in.metadata, BoundaryKind::bos, scored);

    std::vector<bool> meaningful(in.metadata.size());
    for (std::size_t t = 0; t < in.metadata.size(); ++t) meaningful[t] = pos_map.is_meaningful(in.metadata[t].pos_category);
    const auto active = active_tokens(model, in.shard, scored);

    for (std::size_t j = 0; j < scored.size(); ++j) {
        const auto i = scored[j];
        auto& p = out[static_cast<std::size_t>(i)];
        p.rho_period = period.rho(i);
        p.rho_newline = newline.rho(i);
        p.rho_bos = bos.rho(i);
        p.meaningful_auc = binary_auc(active[j], meaningful).auc;
    }
    return out;
}

bool is_non_positional(const LatentProfile& p, double cutoff)
{
    auto within = [cutoff](double rho) { return std::isnan(rho) || std::abs(rho) <= cutoff; };
    return within(p.rho_period) && within(p.rho_newline) && within(p.rho_bos);
}

namespace {
nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }
}  // namespace

nlohmann::json to_json(const LatentProfile& p)
{
    return {{"latent", p.latent},
            {"density", p.density},
            {"antipodality", p.antipodality},
            {"partner", p.partner},
            {"alpha", number_or_null(p.alpha)},
            {"pc1_cos", number_or_null(p.pc1_cos)},
            {"topm_pc_fraction", number_or_null(p.topm_pc_fraction)},
            {"rho_period", number_or_null(p.rho_period)},
            {"rho_newline", number_or_null(p.rho_newline)},
            {"rho_bos", number_or_null(p.rho_bos)},
            {"alphabet_letter", p.alphabet_letter},
            {"alphabet_metric", number_or_null(p.alphabet_metric)},
            {"alphabet_side", std::string(to_string(p.alphabet_side))},
            {"meaningful_auc", number_or_null(p.meaningful_auc)},
            {"bias_cos_abs", p.bias_cos_abs},
            {"degenerate", p.degenerate}};
}

}  // namespace dlab
