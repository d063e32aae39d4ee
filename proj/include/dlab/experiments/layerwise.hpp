#pragma once

#include "dlab/common.hpp"
#include "dlab/dataset/shard.hpp"
#include "dlab/sae/model.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace dlab {

// rows: layers, columns: thresholds; entry = fraction of latents with
// density > threshold. Thresholds must be ascending in (0, 1).
MatrixXd layerwise_density_fractions(const std::vector<VectorXd>& densities, const std::vector<double>& thresholds);

MatrixXd layerwise_density_fractions(const std::vector<SaeModelF>& models, const std::vector<ActivationShard>& data,
                                     const std::vector<double>& thresholds);

struct AngleMatrix {
    MatrixXd degrees;                // L x L median principal angles; NaN where a layer is absent
    std::vector<Eigen::Index> ranks; // basis rank per layer, 0 when absent
    std::vector<bool> present;
};

// Layers with no latent above the threshold are marked absent rather than
// failing the whole matrix.
AngleMatrix layerwise_subspace_angles(const std::vector<MatrixXd>& decoders, const std::vector<VectorXd>& densities,
                                      double threshold);

AngleMatrix layerwise_subspace_angles(const std::vector<SaeModelF>& models, const std::vector<VectorXd>& densities,
                                      double threshold);

nlohmann::json to_json(const AngleMatrix& m);

}  // namespace dlab
