#pragma once

#include "dlab/common.hpp"
#include "dlab/sae/activation.hpp"

#include <random>
#include <vector>

namespace dlab {

// f(x) = act(W_enc x + b_enc), x_hat(f) = W_dec f + b_dec.
template <typename Scalar>
struct SaeModel {
    Matrix<Scalar> w_enc;  // d_sae x d_model
    Vector<Scalar> b_enc;  // d_sae
    Matrix<Scalar> w_dec;  // d_model x d_sae
    Vector<Scalar> b_dec;  // d_model
    Activation<Scalar> activation = TopK{1};

    Eigen::Index d_model() const { return w_dec.rows(); }
    Eigen::Index d_sae() const { return w_dec.cols(); }

    void validate() const
    {
        require(d_model() >= 1 && d_sae() >= 1, "SAE dimensions must be positive");
        require(w_enc.rows() == d_sae() && w_enc.cols() == d_model(), "W_enc must be d_sae x d_model");
        require(b_enc.size() == d_sae(), "b_enc must have length d_sae");
        require(b_dec.size() == d_model(), "b_dec must have length d_model");
        if (!(w_enc.allFinite() && b_enc.allFinite() && w_dec.allFinite() && b_dec.allFinite()))
            throw NumericError("SAE weights contain non-finite values");
        validate_activation(activation, d_sae());
    }

    template <typename To>
    SaeModel<To> cast() const
    {
        return {w_enc.template cast<To>(), b_enc.template cast<To>(), w_dec.template cast<To>(),
                b_dec.template cast<To>(), cast_activation<To, Scalar>(activation)};
    }

    bool operator==(const SaeModel& o) const
    {
        return w_enc == o.w_enc && b_enc == o.b_enc && w_dec == o.w_dec && b_dec == o.b_dec &&
               activation.index() == o.activation.index() && activation_params_equal(o);
    }

private:
    bool activation_params_equal(const SaeModel& o) const
    {
        if (const auto* t = std::get_if<TopK>(&activation)) return t->k == std::get<TopK>(o.activation).k;
        if (const auto* a = std::get_if<AbsoluteTopK>(&activation)) return a->k == std::get<AbsoluteTopK>(o.activation).k;
        return std::get<JumpReLU<Scalar>>(activation).theta == std::get<JumpReLU<Scalar>>(o.activation).theta;
    }
};

using SaeModelF = SaeModel<float>;
using SaeModelD = SaeModel<double>;

// W_dec columns random unit vectors, W_enc = W_dec^T, zero biases.
template <typename Scalar>
SaeModel<Scalar> init_sae(Eigen::Index d_model, Eigen::Index d_sae, const Activation<Scalar>& act, std::mt19937_64& rng)
{
    require(d_model >= 1 && d_sae >= d_model, "SAE requires d_sae >= d_model >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix<double> dec(d_model, d_sae);
    for (Eigen::Index j = 0; j < d_sae; ++j) {
        for (Eigen::Index i = 0; i < d_model; ++i) dec(i, j) = normal(rng);
        dec.col(j).normalize();
    }
    SaeModel<Scalar> m;
    m.w_dec = dec.cast<Scalar>();
    m.w_enc = m.w_dec.transpose();
    m.b_enc = Vector<Scalar>::Zero(d_sae);
    m.b_dec = Vector<Scalar>::Zero(d_model);
    m.activation = act;
    m.validate();
    return m;
}

template <typename Scalar, typename Derived>
Vector<Scalar> encode(const SaeModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x)
{
    require(x.size() == model.d_model(), "encode: input length must equal d_model");
    const Vector<Scalar> pre = model.w_enc * x.template cast<Scalar>() + model.b_enc;
    return apply_activation(pre, model.activation);
}

template <typename Scalar, typename Derived>
Vector<Scalar> decode(const SaeModel<Scalar>& model, const Eigen::MatrixBase<Derived>& f)
{
    require(f.size() == model.d_sae(), "decode: code length must equal d_sae");
    return model.w_dec * f.template cast<Scalar>() + model.b_dec;
}

// Per-row pass-through sets for a batch (rows of x are tokens).
template <typename Scalar>
struct BatchCodes {
    Matrix<Scalar> pre;  // n x d_sae
    std::vector<std::vector<Eigen::Index>> active;
};

template <typename Scalar, typename Derived>
BatchCodes<Scalar> encode_rows(const SaeModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x)
{
    require(x.cols() == model.d_model(), "encode_rows: column count must equal d_model");
    BatchCodes<Scalar> out;
    out.pre.noalias() = x.template cast<Scalar>() * model.w_enc.transpose();
    out.pre.rowwise() += model.b_enc.transpose();
    out.active.resize(static_cast<std::size_t>(x.rows()));
    std::vector<Eigen::Index> scratch;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        pass_through_indices(out.pre.row(r).transpose(), model.activation, scratch, out.active[static_cast<std::size_t>(r)]);
    return out;
}

// Mean over rows of ||x - x_hat(f(x))||^2.
template <typename Scalar, typename Derived>
Scalar loss(const SaeModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x)
{
    require(x.rows() >= 1, "loss: batch must be nonempty");
    const auto codes = encode_rows(model, x);
    Scalar total = 0;
    Vector<Scalar> recon(model.d_model());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        recon = model.b_dec;
        for (auto i : codes.active[static_cast<std::size_t>(r)]) recon += codes.pre(r, i) * model.w_dec.col(i);
        total += (x.row(r).transpose().template cast<Scalar>() - recon).squaredNorm();
    }
    return total / static_cast<Scalar>(x.rows());
}

template <typename Scalar>
struct SaeGradients {
    Matrix<Scalar> w_enc;
    Vector<Scalar> b_enc;
    Matrix<Scalar> w_dec;
    Vector<Scalar> b_dec;

    void resize_like(const SaeModel<Scalar>& m)
    {
        w_enc.setZero(m.w_enc.rows(), m.w_enc.cols());
        b_enc.setZero(m.b_enc.size());
        w_dec.setZero(m.w_dec.rows(), m.w_dec.cols());
        b_dec.setZero(m.b_dec.size());
    }
};

// Loss and its gradient, with the activation mask held fixed at the
// forward-pass value. `fires` (optional) is incremented for every latent
// with a nonzero output on each row.
template <typename Scalar, typename Derived>
Scalar loss_and_gradients(const SaeModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x, SaeGradients<Scalar>& grad,
                          std::vector<std::uint32_t>* fires = nullptr)
{
    require(x.rows() >= 1, "loss: batch must be nonempty");
    grad.resize_like(model);
    const auto codes = encode_rows(model, x);
    const Scalar scale = Scalar(2) / static_cast<Scalar>(x.rows());
    Scalar total = 0;
    Vector<Scalar> err(model.d_model());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const auto& active = codes.active[static_cast<std::size_t>(r)];
        err = model.b_dec - x.row(r).transpose().template cast<Scalar>();
        for (auto i : active) err += codes.pre(r, i) * model.w_dec.col(i);
        total += err.squaredNorm();
        err *= scale;
        grad.b_dec += err;
        for (auto i : active) {
            const Scalar value = codes.pre(r, i);
            grad.w_dec.col(i) += value * err;
            const Scalar dpre = model.w_dec.col(i).dot(err);
            grad.w_enc.row(i) += dpre * x.row(r).template cast<Scalar>();
            grad.b_enc(i) += dpre;
            if (fires && value != Scalar(0)) ++(*fires)[static_cast<std::size_t>(i)];
        }
    }
    return total / static_cast<Scalar>(x.rows());
}

}  // namespace dlab
