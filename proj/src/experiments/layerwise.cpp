#include "dlab/experiments/layerwise.hpp"

#include "dlab/geometry/subspace.hpp"
#include "dlab/sae/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dlab {

MatrixXd layerwise_density_fractions(const std::vector<VectorXd>& densities, const std::vector<double>& thresholds)
{
    require(!thresholds.empty(), "at least one threshold is required");
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        require(thresholds[t] > 0.0 && thresholds[t] < 1.0, "thresholds must lie in (0, 1)");
        require(t == 0 || thresholds[t] > thresholds[t - 1], "thresholds must be strictly ascending");
    }
    MatrixXd out(static_cast<Eigen::Index>(densities.size()), static_cast<Eigen::Index>(thresholds.size()));
    for (std::size_t l = 0; l < densities.size(); ++l) {
        const auto& d = densities[l];
        require(d.size() >= 1, "density vector is empty");
        for (std::size_t t = 0; t < thresholds.size(); ++t)
            out(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(t)) =
                static_cast<double>((d.array() > thresholds[t]).count()) / static_cast<double>(d.size());
    }
    return out;
}

MatrixXd layerwise_density_fractions(const std::vector<SaeModelF>& models, const std::vector<ActivationShard>& data,
                                     const std::vector<double>& thresholds)
{
    require(models.size() == data.size(), "one shard per layer model is required");
    std::vector<VectorXd> densities;
    densities.reserve(models.size());
    for (std::size_t l = 0; l < models.size(); ++l) densities.push_back(latent_density(models[l], data[l]));
    return layerwise_density_fractions(densities, thresholds);
}

AngleMatrix layerwise_subspace_angles(const std::vector<MatrixXd>& decoders, const std::vector<VectorXd>& densities,
                                      double threshold)
{
    require(decoders.size() >= 2, "angle matrix needs at least two layers");
    require(decoders.size() == densities.size(), "one density vector per layer is required");
    const auto layers = static_cast<Eigen::Index>(decoders.size());

    std::vector<MatrixXd> bases(decoders.size());
    AngleMatrix out;
    out.ranks.assign(decoders.size(), 0);
    out.present.assign(decoders.size(), false);
    for (std::size_t l = 0; l < decoders.size(); ++l) {
        require(densities[l].size() == decoders[l].cols(), "density vector length must equal d_sae");
        if ((densities[l].array() > threshold).any()) {
            bases[l] = dense_subspace_basis(decoders[l], densities[l], threshold).basis;
            out.ranks[l] = bases[l].cols();
            out.present[l] = out.ranks[l] > 0;
        }
    }

    out.degrees = MatrixXd::Constant(layers, layers, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index a = 0; a < layers; ++a) {
        if (!out.present[static_cast<std::size_t>(a)]) continue;
        out.degrees(a, a) = 0.0;
        for (Eigen::Index b = a + 1; b < layers; ++b) {
            if (!out.present[static_cast<std::size_t>(b)]) continue;
            const double m = principal_angles(bases[static_cast<std::size_t>(a)], bases[static_cast<std::size_t>(b)]).median;
            out.degrees(a, b) = out.degrees(b, a) = std::clamp(m, 0.0, 90.0);
        }
    }
    return out;
}

AngleMatrix layerwise_subspace_angles(const std::vector<SaeModelF>& models, const std::vector<VectorXd>& densities,
                                      double threshold)
{
    std::vector<MatrixXd> decoders;
    decoders.reserve(models.size());
    for (const auto& m : models) decoders.push_back(m.w_dec.cast<double>());
    return layerwise_subspace_angles(decoders, densities, threshold);
}

nlohmann::json to_json(const AngleMatrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index a = 0; a < m.degrees.rows(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index b = 0; b < m.degrees.cols(); ++b)
            row.push_back(std::isnan(m.degrees(a, b)) ? nlohmann::json(nullptr) : nlohmann::json(m.degrees(a, b)));
        rows.push_back(row);
    }
    return {{"median_degrees", rows}, {"ranks", m.ranks}, {"present", m.present}};
}

}  // namespace dlab
