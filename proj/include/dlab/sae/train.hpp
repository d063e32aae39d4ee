#pragma once

#include "dlab/dataset/shard.hpp"
#include "dlab/sae/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace dlab {

struct TrainConfig {
    int d_sae = 512;
    int batch_size = 256;
    int steps = 5000;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    int telemetry_interval = 100;
    bool resample_dead = false;

    void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);

struct DensityCheckpoint {
    int step = 0;
    int dense_count = 0;  // latents with windowed frequency > 0.1
};

struct DensityTelemetry {
    std::vector<DensityCheckpoint> checkpoints;
};

struct TrainResult {
    SaeModelF model;
    DensityTelemetry telemetry;
    std::vector<float> loss_history;  // one entry per step
};

// Adam state for one parameter block.
template <typename Scalar>
struct AdamMoments {
    Matrix<Scalar> m;
    Matrix<Scalar> v;
};

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// One bias-corrected Adam update at 1-based step t.
template <typename Scalar, typename Param, typename Grad>
void adam_update(Eigen::MatrixBase<Param>& param, const Eigen::MatrixBase<Grad>& grad, AdamMoments<Scalar>& state,
                 const AdamHyper& h, int t)
{
    if (state.m.size() == 0) {
        state.m.setZero(param.rows(), param.cols());
        state.v.setZero(param.rows(), param.cols());
    }
    const Scalar b1 = static_cast<Scalar>(h.beta1);
    const Scalar b2 = static_cast<Scalar>(h.beta2);
    const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(h.beta1, t));
    const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(h.beta2, t));
    const Scalar lr = static_cast<Scalar>(h.learning_rate);
    const Scalar eps = static_cast<Scalar>(h.epsilon);
    state.m.array() = b1 * state.m.array() + (Scalar(1) - b1) * grad.array();
    state.v.array() = b2 * state.v.array() + (Scalar(1) - b2) * grad.array().square();
    param.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

// Trains a TopK or AbsoluteTopK SAE on the shard rows. Deterministic for a
// fixed seed. Throws NumericError if the loss becomes non-finite.
TrainResult train(const TrainConfig& config, const ActivationShard& data, const Activation<float>& variant);

// Trains from a given initial model instead of the default initialisation.
TrainResult train_from(const TrainConfig& config, const ActivationShard& data, SaeModelF init);

// Fraction of tokens on which each latent's output is nonzero.
template <typename Scalar>
VectorXd latent_density(const SaeModel<Scalar>& model, const ActivationShard& data);

extern template VectorXd latent_density<float>(const SaeModel<float>&, const ActivationShard&);
extern template VectorXd latent_density<double>(const SaeModel<double>&, const ActivationShard&);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    int checked = 0;
    int skipped_unstable = 0;
};

// Central finite differences against loss_and_gradients on a random subset
// of at most `max_params` parameters. Parameters whose ±epsilon
// perturbation changes any row's activation mask are skipped. Relative
// error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(const SaeModelD& model, const MatrixXd& batch, double epsilon,
                                   int max_params = 400, std::uint64_t seed = 0);

}  // namespace dlab
