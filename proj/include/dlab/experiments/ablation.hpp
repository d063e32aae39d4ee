#pragma once

#include "dlab/dataset/shard.hpp"
#include "dlab/sae/train.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <vector>

namespace dlab {

// 60 log-spaced bins over [1e-5, 1] plus an exact-zero bin. Nonzero values
// below 1e-5 are counted in `underflow`.
struct DensityHistogram {
    static constexpr int kBins = 60;
    static constexpr double kLow = 1e-5;
    static constexpr double kHigh = 1.0;

    std::vector<double> edges;          // kBins + 1, ascending
    std::vector<std::size_t> counts;    // kBins
    std::size_t zero = 0;
    std::size_t underflow = 0;
};

DensityHistogram density_histogram(const VectorXd& densities);

inline constexpr std::array<double, 4> kDensityThresholds = {0.05, 0.1, 0.2, 0.3};

std::size_t count_above(const VectorXd& densities, double threshold);

struct AblationConfig {
    TrainConfig train;
    int k = 8;
    double dense_threshold = 0.1;

    void validate() const;
};

AblationConfig ablation_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AblationConfig& c);

struct AblationArm {
    std::string name;
    TrainResult result;
    VectorXd density;
    DensityHistogram histogram;
    std::array<std::size_t, kDensityThresholds.size()> above{};
};

struct AblationStudyResult {
    AblationArm baseline;
    AblationArm dense_ablated;
    AblationArm sparse_ablated;
    std::vector<Eigen::Index> dense_latents;   // baseline latents above the threshold
    std::vector<Eigen::Index> sparse_latents;  // sampled control latents
    Eigen::Index dense_rank = 0;
    Eigen::Index sparse_rank = 0;
    bool degenerate = false;  // no dense latents in the baseline; arms 2 and 3 reuse the data unchanged
    nlohmann::json arm_config;  // identical for all arms

    std::size_t dense_count(const AblationArm& arm) const { return count_above(arm.density, dense_threshold); }
    double dense_threshold = 0.1;
};

// Baseline SAE; dense subspace from its decoder; retrain on the data with
// that subspace removed, and on the data with a rank-matched subspace of
// randomly sampled non-dense latents removed. All arms share one config.
AblationStudyResult run_ablation_experiment(const AblationConfig& config, const ActivationShard& data);

nlohmann::json to_json(const AblationStudyResult& r);

}  // namespace dlab
