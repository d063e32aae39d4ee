#include "dlab/experiments/ablation.hpp"

#include "dlab/dataset/ablation.hpp"
#include "dlab/geometry/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dlab {

DensityHistogram density_histogram(const VectorXd& densities)
{
    DensityHistogram h;
    constexpr int n = DensityHistogram::kBins;
    const double lo = std::log10(DensityHistogram::kLow);
    const double hi = std::log10(DensityHistogram::kHigh);
    h.edges.resize(n + 1);
    for (int i = 0; i <= n; ++i) h.edges[static_cast<std::size_t>(i)] = std::pow(10.0, lo + (hi - lo) * i / n);
    h.edges.front() = DensityHistogram::kLow;
    h.edges.back() = DensityHistogram::kHigh;
    h.counts.assign(n, 0);
    for (Eigen::Index i = 0; i < densities.size(); ++i) {
        const double d = densities(i);
        require(d >= 0.0 && d <= 1.0, "densities must lie in [0, 1]");
        if (d == 0.0) {
            ++h.zero;
        } else if (d < DensityHistogram::kLow) {
            ++h.underflow;
        } else {
            // Last bin is closed on the right so that density 1 is counted.
            auto it = std::upper_bound(h.edges.begin(), h.edges.end(), d);
            auto bin = std::distance(h.edges.begin(), it) - 1;
            bin = std::clamp<std::ptrdiff_t>(bin, 0, n - 1);
            ++h.counts[static_cast<std::size_t>(bin)];
        }
    }
    return h;
}

std::size_t count_above(const VectorXd& densities, double threshold)
{
    return static_cast<std::size_t>((densities.array() > threshold).count());
}

void AblationConfig::validate() const
{
    train.validate();
    require(k >= 1 && k <= train.d_sae, "k must lie in [1, d_sae]");
    require(dense_threshold > 0.0 && dense_threshold < 1.0, "dense_threshold must lie in (0, 1)");
}

AblationConfig ablation_config_from_json(const nlohmann::json& j)
{
    AblationConfig c;
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.k = j.value("k", c.k);
    c.dense_threshold = j.value("dense_threshold", c.dense_threshold);
    c.validate();
    return c;
}

nlohmann::json to_json(const AblationConfig& c)
{
    return {{"train", to_json(c.train)}, {"k", c.k}, {"dense_threshold", c.dense_threshold}};
}

namespace {

AblationArm make_arm(std::string name, const AblationConfig& config, const ActivationShard& data)
{
    AblationArm arm;
    arm.name = std::move(name);
    arm.result = train(config.train, data, TopK{config.k});
    arm.density = latent_density(arm.result.model, data);
    arm.histogram = density_histogram(arm.density);
    for (std::size_t t = 0; t < kDensityThresholds.size(); ++t) arm.above[t] = count_above(arm.density, kDensityThresholds[t]);
    return arm;
}

MatrixXd decoder_columns(const SaeModelF& model, const std::vector<Eigen::Index>& latents)
{
    MatrixXd cols(model.d_model(), static_cast<Eigen::Index>(latents.size()));
    for (std::size_t j = 0; j < latents.size(); ++j) cols.col(static_cast<Eigen::Index>(j)) = model.w_dec.col(latents[j]).cast<double>();
    return cols;
}

}  // namespace

AblationStudyResult run_ablation_experiment(const AblationConfig& config, const ActivationShard& data)
{
    config.validate();
    AblationStudyResult out;
    out.dense_threshold = config.dense_threshold;
    out.arm_config = to_json(config);
    out.baseline = make_arm("baseline", config, data);

    const auto& model = out.baseline.result.model;
    std::vector<Eigen::Index> sparse_pool;
    for (Eigen::Index i = 0; i < model.d_sae(); ++i) {
        if (out.baseline.density(i) > config.dense_threshold) {
            out.dense_latents.push_back(i);
        } else {
            sparse_pool.push_back(i);
        }
    }

    MatrixXd dense_basis(model.d_model(), 0);
    MatrixXd sparse_basis(model.d_model(), 0);
    if (out.dense_latents.empty()) {
        out.degenerate = true;
    } else {
        dense_basis = orthonormal_basis(decoder_columns(model, out.dense_latents));
        out.dense_rank = dense_basis.cols();

        // Sample non-dense latents until the control subspace reaches the
        // dense rank (or the pool runs out).
        std::mt19937_64 rng(config.train.seed ^ 0x5bd1e995ULL);
        std::shuffle(sparse_pool.begin(), sparse_pool.end(), rng);
        std::size_t take = std::min(static_cast<std::size_t>(out.dense_rank), sparse_pool.size());
        for (;;) {
            out.sparse_latents.assign(sparse_pool.begin(), sparse_pool.begin() + static_cast<std::ptrdiff_t>(take));
            sparse_basis = orthonormal_basis(decoder_columns(model, out.sparse_latents));
            if (sparse_basis.cols() >= out.dense_rank || take == sparse_pool.size()) break;
            ++take;
        }
        out.sparse_rank = sparse_basis.cols();
    }

    out.dense_ablated = make_arm("dense_ablated", config, ablate_subspace(data, dense_basis));
    out.sparse_ablated = make_arm("sparse_ablated", config, ablate_subspace(data, sparse_basis));
    return out;
}

nlohmann::json to_json(const AblationStudyResult& r)
{
    auto arm = [&](const AblationArm& a) {
        nlohmann::json above = nlohmann::json::object();
        for (std::size_t t = 0; t < kDensityThresholds.size(); ++t) above[std::to_string(kDensityThresholds[t])] = a.above[t];
        return nlohmann::json{{"name", a.name}, {"dense_count", r.dense_count(a)}, {"above", above},
                              {"final_loss", a.result.loss_history.empty() ? 0.0 : a.result.loss_history.back()}};
    };
    return {{"config", r.arm_config},
            {"dense_threshold", r.dense_threshold},
            {"degenerate", r.degenerate},
            {"dense_latents", r.dense_latents},
            {"sparse_latents", r.sparse_latents},
            {"dense_rank", r.dense_rank},
            {"sparse_rank", r.sparse_rank},
            {"arms", {arm(r.baseline), arm(r.dense_ablated), arm(r.sparse_ablated)}}};
}

}  // namespace dlab
