#include "dlab/sae/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dlab {

namespace {

// Flat parameter layout: W_enc, b_enc, W_dec, b_dec (Eigen storage order).
template <typename M>
auto& flat_entry(M& model_or_grad, Eigen::Index idx)
{
    auto& w_enc = model_or_grad.w_enc;
    if (idx < w_enc.size()) return w_enc.data()[idx];
    idx -= w_enc.size();
    auto& b_enc = model_or_grad.b_enc;
    if (idx < b_enc.size()) return b_enc.data()[idx];
    idx -= b_enc.size();
    auto& w_dec = model_or_grad.w_dec;
    if (idx < w_dec.size()) return w_dec.data()[idx];
    idx -= w_dec.size();
    return model_or_grad.b_dec.data()[idx];
}

}  // namespace

GradientCheckResult gradient_check(const SaeModelD& model, const MatrixXd& batch, double epsilon, int max_params,
                                   std::uint64_t seed)
{
    require(epsilon > 0.0 && epsilon <= 1e-2, "gradient check epsilon must lie in (0, 1e-2]");
    model.validate();

    SaeGradients<double> grad;
    loss_and_gradients(model, batch, grad);
    const auto base_active = encode_rows(model, batch).active;

    const Eigen::Index total = model.w_enc.size() + model.b_enc.size() + model.w_dec.size() + model.b_dec.size();
    std::vector<Eigen::Index> params(static_cast<std::size_t>(total));
    std::iota(params.begin(), params.end(), Eigen::Index{0});
    if (max_params > 0 && total > max_params) {
        std::mt19937_64 rng(seed);
        std::shuffle(params.begin(), params.end(), rng);
        params.resize(static_cast<std::size_t>(max_params));
        std::sort(params.begin(), params.end());
    }

    GradientCheckResult out;
    SaeModelD probe = model;
    for (auto p : params) {
        double& slot = flat_entry(probe, p);
        const double original = slot;

        slot = original + epsilon;
        const bool stable_plus = encode_rows(probe, batch).active == base_active;
        const double loss_plus = loss(probe, batch);
        slot = original - epsilon;
        const bool stable_minus = encode_rows(probe, batch).active == base_active;
        const double loss_minus = loss(probe, batch);
        slot = original;

        if (!stable_plus || !stable_minus) {
            ++out.skipped_unstable;
            continue;
        }
        const double numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
        const double analytic = flat_entry(grad, p);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic - numeric) / denom);
        ++out.checked;
    }
    return out;
}

}  // namespace dlab
