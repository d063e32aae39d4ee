#include "dlab/sae/train.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace dlab {

void TrainConfig::validate() const
{
    require(d_sae >= 1, "d_sae must be positive");
    require(batch_size >= 1, "batch_size must be positive");
    require(steps >= 1, "steps must be positive");
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning rate must be finite and >= 0");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
    require(epsilon > 0.0, "Adam epsilon must be positive");
    require(telemetry_interval >= 1, "telemetry interval must be positive");
}

TrainConfig train_config_from_json(const nlohmann::json& j)
{
    TrainConfig c;
    c.d_sae = j.value("d_sae", c.d_sae);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.seed = j.value("seed", c.seed);
    c.telemetry_interval = j.value("telemetry_interval", c.telemetry_interval);
    c.resample_dead = j.value("resample_dead", c.resample_dead);
    c.validate();
    return c;
}

nlohmann::json to_json(const TrainConfig& c)
{
    return {{"d_sae", c.d_sae},         {"batch_size", c.batch_size}, {"steps", c.steps},
            {"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2},
            {"epsilon", c.epsilon},     {"seed", c.seed},             {"telemetry_interval", c.telemetry_interval},
            {"resample_dead", c.resample_dead}};
}

namespace {

void normalize_decoder_columns(SaeModelF& m)
{
    for (Eigen::Index j = 0; j < m.d_sae(); ++j) {
        const float n = m.w_dec.col(j).norm();
        if (n > 0.0f) m.w_dec.col(j) /= n;
    }
}

}  // namespace

TrainResult train_from(const TrainConfig& config, const ActivationShard& data, SaeModelF model)
{
    config.validate();
    model.validate();
    require(data.d_model() == model.d_model(), "training data width must equal d_model");
    require(data.n_tokens() >= 1, "training data is empty");
    require(!std::holds_alternative<JumpReLU<float>>(model.activation), "JumpReLU SAEs are inference-only");

    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const AdamHyper hyper{config.learning_rate, config.beta1, config.beta2, config.epsilon};

    TrainResult result;
    result.loss_history.reserve(static_cast<std::size_t>(config.steps));

    const Eigen::Index n = data.n_tokens();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::size_t cursor = order.size();

    SaeGradients<float> grad;
    AdamMoments<float> s_w_enc, s_b_enc, s_w_dec, s_b_dec;
    RowMatrix<float> batch(config.batch_size, data.d_model());
    std::vector<std::uint32_t> fires(static_cast<std::size_t>(model.d_sae()), 0);
    std::int64_t window_tokens = 0;

    for (int step = 1; step <= config.steps; ++step) {
        for (int r = 0; r < config.batch_size; ++r) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            batch.row(r) = data.values.row(order[cursor++]);
        }

        const float l = loss_and_gradients(model, batch, grad, &fires);
        if (!std::isfinite(l))
            throw NumericError("non-finite training loss at step " + std::to_string(step));
        result.loss_history.push_back(l);
        window_tokens += config.batch_size;

        adam_update(model.w_enc, grad.w_enc, s_w_enc, hyper, step);
        adam_update(model.b_enc, grad.b_enc, s_b_enc, hyper, step);
        adam_update(model.w_dec, grad.w_dec, s_w_dec, hyper, step);
        adam_update(model.b_dec, grad.b_dec, s_b_dec, hyper, step);
        normalize_decoder_columns(model);

        if (step % config.telemetry_interval == 0 || step == config.steps) {
            int dense = 0;
            for (auto f : fires)
                if (static_cast<double>(f) / static_cast<double>(window_tokens) > 0.1) ++dense;
            result.telemetry.checkpoints.push_back({step, dense});

            if (config.resample_dead) {
                std::normal_distribution<float> normal(0.0f, 1.0f);
                for (Eigen::Index j = 0; j < model.d_sae(); ++j) {
                    if (fires[static_cast<std::size_t>(j)] != 0) continue;
                    for (Eigen::Index i = 0; i < model.d_model(); ++i) model.w_dec(i, j) = normal(rng);
                    model.w_dec.col(j).normalize();
                    model.w_enc.row(j) = model.w_dec.col(j).transpose();
                    model.b_enc(j) = 0.0f;
                    s_w_enc.m.row(j).setZero();
                    s_w_enc.v.row(j).setZero();
                    s_w_dec.m.col(j).setZero();
                    s_w_dec.v.col(j).setZero();
                    s_b_enc.m(j) = s_b_enc.v(j) = 0.0f;
                }
            }
            std::fill(fires.begin(), fires.end(), 0u);
            window_tokens = 0;
        }
    }
    result.model = std::move(model);
    return result;
}

TrainResult train(const TrainConfig& config, const ActivationShard& data, const Activation<float>& variant)
{
    config.validate();
    require(data.d_model() >= 1, "training data must have positive width");
    std::mt19937_64 init_rng(config.seed);
    auto model = init_sae<float>(data.d_model(), config.d_sae, variant, init_rng);
    return train_from(config, data, std::move(model));
}

template <typename Scalar>
VectorXd latent_density(const SaeModel<Scalar>& model, const ActivationShard& data)
{
    require(data.n_tokens() >= 1, "density: data is empty");
    require(data.d_model() == model.d_model(), "density: data width must equal d_model");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(model.d_sae()), 0);
    constexpr Eigen::Index kChunk = 2048;
    for (Eigen::Index start = 0; start < data.n_tokens(); start += kChunk) {
        const Eigen::Index rows = std::min(kChunk, data.n_tokens() - start);
        const auto codes = encode_rows(model, data.values.middleRows(start, rows));
        for (Eigen::Index r = 0; r < rows; ++r)
            for (auto i : codes.active[static_cast<std::size_t>(r)])
                if (codes.pre(r, i) != Scalar(0)) ++counts[static_cast<std::size_t>(i)];
    }
    VectorXd density(model.d_sae());
    for (Eigen::Index i = 0; i < model.d_sae(); ++i)
        density(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(data.n_tokens());
    return density;
}

template VectorXd latent_density<float>(const SaeModel<float>&, const ActivationShard&);
template VectorXd latent_density<double>(const SaeModel<double>&, const ActivationShard&);

}  // namespace dlab
