#pragma once

#include "dlab/common.hpp"
#include "dlab/dataset/boundaries.hpp"
#include "dlab/dataset/shard.hpp"
#include "dlab/geometry/unembedding.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dlab {

enum class PlantedKind {
    antipodal_line,
    positional_ramp,
    nullspace_mass,
    alphabet_centroid,
    pc1_dominant,
    meaningful_indicator,
};

std::string_view to_string(PlantedKind k);
PlantedKind planted_kind_from_string(std::string_view name);

// One dense component of the generator. Fields that do not apply to `kind`
// are ignored.
struct PlantedSpec {
    PlantedKind kind = PlantedKind::antipodal_line;
    double scale = 0.0;  // 0 selects the per-kind default
    // antipodal_line: > 0 alternates the sign every sign_block tokens
    // (counted from the context start) instead of drawing it per token.
    int sign_block = 0;
    BoundaryKind boundary = BoundaryKind::bos;  // positional_ramp
    int subspace_dim = 3;                       // nullspace_mass
    // antipodal_line, nullspace_mass: fraction of tokens that carry the
    // component. positional_ramp: the ramp is zero below the (1 - rate)
    // distance quantile and rises to `scale` above it.
    double active_rate = 1.0;
    char letter = 'T';                          // alphabet_centroid
};

struct SyntheticConfig {
    int d_model = 64;
    int n_contexts = 64;
    int context_len = 128;
    std::int32_t layer = 0;

    int n_sparse_features = 256;
    double sparse_rate = 0.01;
    double sparse_scale = 1.0;
    double noise_std = 0.0;

    double period_rate = 0.08;
    double newline_rate = 0.02;
    double meaningful_fraction = 0.5;

    int vocab_size = 1024;
    int n_nullspace_dims = 10;
    int letter_tokens = 160;

    std::vector<PlantedSpec> planted;

    void validate() const;
};

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticConfig& c);

struct PlantedDirection {
    PlantedSpec spec;
    VectorXd direction;  // unit norm, length d_model
};

struct SyntheticGroundTruth {
    std::vector<PlantedDirection> planted;
    MatrixXd sparse_directions;  // d_model x n_sparse_features, unit columns
    MatrixXd nullspace_basis;    // trailing left singular vectors of W_U
};

nlohmann::json to_json(const SyntheticGroundTruth& gt);

struct SyntheticDataset {
    ActivationShard shard;
    std::vector<TokenMetadata> metadata;
    SyntheticGroundTruth truth;
    Unembedding unembedding;
};

// Pure function of (config, seed).
SyntheticDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace dlab
