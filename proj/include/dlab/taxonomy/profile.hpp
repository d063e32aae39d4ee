#pragma once

#include "dlab/dataset/shard.hpp"
#include "dlab/geometry/unembedding.hpp"
#include "dlab/sae/model.hpp"
#include "dlab/taxonomy/alphabet.hpp"
#include "dlab/taxonomy/pos_map.hpp"

#include <nlohmann/json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace dlab {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-latent measurements feeding the classifiers. NaN marks a metric that
// was not computed (no unembedding, or a token-level metric on a latent
// below the profiling density gate).
struct LatentProfile {
    Eigen::Index latent = 0;
    double density = 0.0;
    double antipodality = 0.0;
    Eigen::Index partner = -1;
    double alpha = kNaN;  // nullspace alignment at ProfileConfig::nullspace_k
    double pc1_cos = kNaN;
    double topm_pc_fraction = kNaN;
    double rho_period = kNaN;
    double rho_newline = kNaN;
    double rho_bos = kNaN;
    std::string alphabet_letter;
    double alphabet_metric = kNaN;
    AlphabetSide alphabet_side = AlphabetSide::promote;
    double meaningful_auc = kNaN;
    double bias_cos_abs = 0.0;
    bool degenerate = false;  // zero encoder row or decoder column
};

struct ProfileConfig {
    int nullspace_k = 10;
    int pca_components = 5;
    int alphabet_top_n = 100;
    // Position and AUC scoring touch every token, so by default they run
    // only on latents above this density. Zero scores every latent.
    double token_metric_min_density = 0.1;

    void validate() const;
};

ProfileConfig profile_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProfileConfig& c);

struct ProfileInputs {
    const SaeModelF& model;
    const ActivationShard& shard;
    const std::vector<TokenMetadata>& metadata;
    const Unembedding* unembedding = nullptr;  // nullspace and alphabet need it
    const PosCategoryMap* pos_map = nullptr;   // default table when null
};

std::vector<LatentProfile> build_profiles(const ProfileInputs& in, const ProfileConfig& config = {});

// Spearman rho magnitudes all within |rho| <= cutoff (NaN counts as within).
bool is_non_positional(const LatentProfile& p, double cutoff);

nlohmann::json to_json(const LatentProfile& p);

}  // namespace dlab
