#pragma once

#include "dlab/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace dlab {

// Keep the k largest pre-activations, then ReLU (a selected negative becomes 0).
struct TopK {
    int k = 1;
};

// Keep the k entries of largest magnitude with their sign.
struct AbsoluteTopK {
    int k = 1;
};

// out_i = pre_i if pre_i > theta_i else 0. Inference only.
template <typename Scalar>
struct JumpReLU {
    Vector<Scalar> theta;
};

template <typename Scalar>
using Activation = std::variant<TopK, AbsoluteTopK, JumpReLU<Scalar>>;

template <typename Scalar>
std::string activation_name(const Activation<Scalar>& act)
{
    struct Visitor {
        std::string operator()(const TopK&) const { return "topk"; }
        std::string operator()(const AbsoluteTopK&) const { return "abs_topk"; }
        std::string operator()(const JumpReLU<Scalar>&) const { return "jumprelu"; }
    };
    return std::visit(Visitor{}, act);
}

template <typename To, typename From>
Activation<To> cast_activation(const Activation<From>& act)
{
    if (const auto* j = std::get_if<JumpReLU<From>>(&act)) return JumpReLU<To>{j->theta.template cast<To>()};
    if (const auto* t = std::get_if<TopK>(&act)) return *t;
    return std::get<AbsoluteTopK>(act);
}

namespace detail {

// Indices of the k best entries under (key desc, index asc), returned in
// ascending index order. `scratch` is reused across calls.
template <typename Key>
void select_top_k(Eigen::Index n, int k, Key key, std::vector<Eigen::Index>& scratch, std::vector<Eigen::Index>& out)
{
    scratch.resize(static_cast<std::size_t>(n));
    std::iota(scratch.begin(), scratch.end(), Eigen::Index{0});
    const auto kk = static_cast<std::size_t>(std::min<Eigen::Index>(k, n));
    auto better = [&](Eigen::Index a, Eigen::Index b) {
        const auto ka = key(a);
        const auto kb = key(b);
        return ka > kb || (ka == kb && a < b);
    };
    if (kk < scratch.size()) std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kk), scratch.end(), better);
    out.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kk));
    std::sort(out.begin(), out.end());
}

}  // namespace detail

// Indices where the activation passes the pre-activation through unchanged
// (and so has derivative 1); every other output is exactly 0. Ascending.
template <typename Derived, typename Scalar = typename Derived::Scalar>
void pass_through_indices(const Eigen::MatrixBase<Derived>& pre, const std::type_identity_t<Activation<Scalar>>& act,
                          std::vector<Eigen::Index>& scratch, std::vector<Eigen::Index>& out)
{
    const Eigen::Index n = pre.size();
    out.clear();
    if (const auto* t = std::get_if<TopK>(&act)) {
        std::vector<Eigen::Index> sel;
        detail::select_top_k(n, t->k, [&](Eigen::Index i) { return pre(i); }, scratch, sel);
        for (auto i : sel)
            if (pre(i) > Scalar(0)) out.push_back(i);
    } else if (const auto* a = std::get_if<AbsoluteTopK>(&act)) {
        using std::abs;
        detail::select_top_k(n, a->k, [&](Eigen::Index i) { return abs(pre(i)); }, scratch, out);
    } else {
        const auto& theta = std::get<JumpReLU<Scalar>>(act).theta;
        for (Eigen::Index i = 0; i < n; ++i)
            if (pre(i) > theta(i)) out.push_back(i);
    }
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
Vector<Scalar> apply_activation(const Eigen::MatrixBase<Derived>& pre, const std::type_identity_t<Activation<Scalar>>& act)
{
    std::vector<Eigen::Index> scratch, idx;
    pass_through_indices(pre, act, scratch, idx);
    Vector<Scalar> out = Vector<Scalar>::Zero(pre.size());
    for (auto i : idx) out(i) = pre(i);
    return out;
}

template <typename Scalar>
void validate_activation(const Activation<Scalar>& act, Eigen::Index d_sae)
{
    if (const auto* t = std::get_if<TopK>(&act)) {
        require(t->k >= 1 && t->k <= d_sae, "TopK k must lie in [1, d_sae]");
    } else if (const auto* a = std::get_if<AbsoluteTopK>(&act)) {
        require(a->k >= 1 && a->k <= d_sae, "AbsoluteTopK k must lie in [1, d_sae]");
    } else {
        const auto& theta = std::get<JumpReLU<Scalar>>(act).theta;
        require(theta.size() == d_sae, "JumpReLU theta length must equal d_sae");
        require(theta.allFinite() && (theta.array() >= Scalar(0)).all(), "JumpReLU theta must be finite and >= 0");
    }
}

}  // namespace dlab
