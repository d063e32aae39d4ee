#pragma once

// Pairwise weight-space similarity between latents. Encoder rows and
// decoder columns are compared by cosine similarity; latents with a zero
// encoder row or decoder column are flagged degenerate and score 0.

#include "dlab/common.hpp"
#include "dlab/sae/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dlab {

template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    const double na = a.template cast<double>().norm();
    const double nb = b.template cast<double>().norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = a.template cast<double>().dot(b.template cast<double>()) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

// Columns scaled to unit norm; zero columns stay zero and are reported.
template <typename Derived>
MatrixXd unit_columns(const Eigen::MatrixBase<Derived>& m, std::vector<bool>* zero = nullptr)
{
    MatrixXd out = m.template cast<double>();
    if (zero) zero->assign(static_cast<std::size_t>(out.cols()), false);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double n = out.col(j).norm();
        if (n > 0.0) {
            out.col(j) /= n;
        } else if (zero) {
            (*zero)[static_cast<std::size_t>(j)] = true;
        }
    }
    return out;
}

struct AntipodalityResult {
    VectorXd score;               // s_i in [-1, 1]
    IndexVector partner;          // argmax j != i, lowest index on ties; -1 if none
    std::vector<bool> degenerate; // zero encoder row or decoder column
};

struct MaxPairwiseSims {
    VectorXd enc_sim;  // sim(enc_i, enc_j) at j = argmax_l |sim(enc_i, enc_l)|
    VectorXd dec_sim;  // sim(dec_i, dec_k) at k = argmax_l |sim(dec_i, dec_l)|
    IndexVector enc_partner;
    IndexVector dec_partner;
};

namespace detail {

// Visits row blocks of the encoder and decoder cosine Gram matrices so that
// memory stays O(block * d_sae).
template <typename Visit>
void for_each_gram_block(const MatrixXd& enc_unit_cols, const MatrixXd& dec_unit_cols, Visit visit)
{
    constexpr Eigen::Index kBlock = 512;
    const Eigen::Index n = enc_unit_cols.cols();
    for (Eigen::Index start = 0; start < n; start += kBlock) {
        const Eigen::Index rows = std::min(kBlock, n - start);
        const MatrixXd g_enc = enc_unit_cols.middleCols(start, rows).transpose() * enc_unit_cols;
        const MatrixXd g_dec = dec_unit_cols.middleCols(start, rows).transpose() * dec_unit_cols;
        visit(start, g_enc, g_dec);
    }
}

}  // namespace detail

// s_i = max_{j != i} sim(enc_i, enc_j) * sim(dec_i, dec_j).
template <typename DerivedE, typename DerivedD>
AntipodalityResult antipodality_scores(const Eigen::MatrixBase<DerivedE>& w_enc, const Eigen::MatrixBase<DerivedD>& w_dec)
{
    require(w_enc.rows() == w_dec.cols() && w_enc.cols() == w_dec.rows(), "antipodality: encoder/decoder shapes disagree");
    const Eigen::Index n = w_dec.cols();
    std::vector<bool> zero_enc, zero_dec;
    const MatrixXd enc = unit_columns(w_enc.transpose(), &zero_enc);
    const MatrixXd dec = unit_columns(w_dec, &zero_dec);

    AntipodalityResult out;
    out.score = VectorXd::Zero(n);
    out.partner = IndexVector::Constant(n, -1);
    out.degenerate.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        out.degenerate[static_cast<std::size_t>(i)] = zero_enc[static_cast<std::size_t>(i)] || zero_dec[static_cast<std::size_t>(i)];

    detail::for_each_gram_block(enc, dec, [&](Eigen::Index start, const MatrixXd& g_enc, const MatrixXd& g_dec) {
        for (Eigen::Index r = 0; r < g_enc.rows(); ++r) {
            const Eigen::Index i = start + r;
            if (out.degenerate[static_cast<std::size_t>(i)]) continue;
            double best = -std::numeric_limits<double>::infinity();
            Eigen::Index arg = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double v = g_enc(r, j) * g_dec(r, j);
                if (v > best) {
                    best = v;
                    arg = j;
                }
            }
            if (arg >= 0) {
                out.score(i) = std::clamp(best, -1.0, 1.0);
                out.partner(i) = arg;
            }
        }
    });
    return out;
}

template <typename Scalar>
AntipodalityResult antipodality_scores(const SaeModel<Scalar>& model)
{
    return antipodality_scores(model.w_enc, model.w_dec);
}

template <typename DerivedE, typename DerivedD>
MaxPairwiseSims max_pairwise_sims(const Eigen::MatrixBase<DerivedE>& w_enc, const Eigen::MatrixBase<DerivedD>& w_dec)
{
    require(w_enc.rows() == w_dec.cols() && w_enc.cols() == w_dec.rows(), "pairwise sims: encoder/decoder shapes disagree");
    const Eigen::Index n = w_dec.cols();
    const MatrixXd enc = unit_columns(w_enc.transpose());
    const MatrixXd dec = unit_columns(w_dec);

    MaxPairwiseSims out;
    out.enc_sim = VectorXd::Zero(n);
    out.dec_sim = VectorXd::Zero(n);
    out.enc_partner = IndexVector::Constant(n, -1);
    out.dec_partner = IndexVector::Constant(n, -1);

    auto argmax_abs = [n](const auto& row, Eigen::Index self) {
        Eigen::Index arg = -1;
        double best = -1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == self) continue;
            if (std::abs(row(j)) > best) {
                best = std::abs(row(j));
                arg = j;
            }
        }
        return arg;
    };
    detail::for_each_gram_block(enc, dec, [&](Eigen::Index start, const MatrixXd& g_enc, const MatrixXd& g_dec) {
        for (Eigen::Index r = 0; r < g_enc.rows(); ++r) {
            const Eigen::Index i = start + r;
            const auto j = argmax_abs(g_enc.row(r), i);
            const auto k = argmax_abs(g_dec.row(r), i);
            if (j >= 0) {
                out.enc_partner(i) = j;
                out.enc_sim(i) = std::clamp(g_enc(r, j), -1.0, 1.0);
            }
            if (k >= 0) {
                out.dec_partner(i) = k;
                out.dec_sim(i) = std::clamp(g_dec(r, k), -1.0, 1.0);
            }
        }
    });
    return out;
}

template <typename Scalar>
MaxPairwiseSims max_pairwise_sims(const SaeModel<Scalar>& model)
{
    return max_pairwise_sims(model.w_enc, model.w_dec);
}

struct BiasSimilarity {
    VectorXd abs_cos;          // |cos(W_dec^(i), b_dec)|
    bool zero_bias = false;    // all zeros when set
};

template <typename Scalar>
BiasSimilarity bias_similarity(const SaeModel<Scalar>& model)
{
    BiasSimilarity out;
    out.abs_cos = VectorXd::Zero(model.d_sae());
    const VectorXd bias = model.b_dec.template cast<double>();
    const double bn = bias.norm();
    if (bn == 0.0) {
        out.zero_bias = true;
        return out;
    }
    for (Eigen::Index i = 0; i < model.d_sae(); ++i) out.abs_cos(i) = std::abs(cosine_similarity(model.w_dec.col(i), bias));
    return out;
}

}  // namespace dlab
