#pragma once

// One-sided (Hestenes) Jacobi SVD. Trailing singular vectors come out of
// the full rotation sequence rather than a truncated iteration, so they are
// as accurate as the leading ones.

#include "dlab/common.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dlab {

template <typename Scalar>
struct SvdResult {
    Matrix<Scalar> u;         // m x r, orthonormal columns
    Vector<Scalar> singular;  // r, descending
    Matrix<Scalar> v;         // n x r, orthonormal columns (n x n when m >= n)
    int sweeps = 0;
};

template <typename Scalar>
constexpr Scalar default_svd_tolerance()
{
    if constexpr (std::is_same_v<Scalar, float>)
        return Scalar(1e-6);
    else
        return Scalar(1e-12);
}

namespace detail {

// Orthogonalises the columns of `work` (m x n, m >= n) in place and
// accumulates the rotations into `v`. Columns whose squared norm is at or
// below `negligible` are rounding noise and are left alone. Returns the
// number of sweeps used.
template <typename Scalar>
int hestenes_sweeps(Matrix<Scalar>& work, Matrix<Scalar>& v, Scalar tol, Scalar negligible, int max_sweeps)
{
    using std::abs;
    using std::sqrt;
    const Eigen::Index n = work.cols();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Scalar alpha = work.col(p).squaredNorm();
                const Scalar beta = work.col(q).squaredNorm();
                const Scalar gamma = work.col(p).dot(work.col(q));
                if (alpha <= negligible || beta <= negligible) continue;
                if (gamma == Scalar(0) || abs(gamma) <= tol * sqrt(alpha * beta)) continue;
                rotated = true;
                const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
                const Scalar t = (zeta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                                 (abs(zeta) + sqrt(Scalar(1) + zeta * zeta));
                const Scalar c = Scalar(1) / sqrt(Scalar(1) + t * t);
                const Scalar s = c * t;
                for (Eigen::Index i = 0; i < work.rows(); ++i) {
                    const Scalar a = work(i, p);
                    const Scalar b = work(i, q);
                    work(i, p) = c * a - s * b;
                    work(i, q) = s * a + c * b;
                }
                for (Eigen::Index i = 0; i < v.rows(); ++i) {
                    const Scalar a = v(i, p);
                    const Scalar b = v(i, q);
                    v(i, p) = c * a - s * b;
                    v(i, q) = s * a + c * b;
                }
            }
        }
        if (!rotated) return sweep;
    }
    throw NumericError("Jacobi SVD did not converge");
}

// Fills columns of `u` flagged in `missing` with an orthonormal completion.
template <typename Scalar>
void complete_orthonormal(Matrix<Scalar>& u, std::vector<bool> missing)
{
    const Eigen::Index m = u.rows();
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        if (!missing[static_cast<std::size_t>(j)]) continue;
        // Try unit vectors until one survives projection against the others.
        for (Eigen::Index e = 0; e < m; ++e) {
            Vector<Scalar> cand = Vector<Scalar>::Unit(m, e);
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index k = 0; k < u.cols(); ++k) {
                    if (k == j || missing[static_cast<std::size_t>(k)]) continue;
                    cand -= u.col(k).dot(cand) * u.col(k);
                }
            }
            const Scalar nrm = cand.norm();
            if (nrm > Scalar(1e-3)) {
                u.col(j) = cand / nrm;
                missing[static_cast<std::size_t>(j)] = false;
                break;
            }
        }
    }
}

template <typename Scalar>
SvdResult<Scalar> jacobi_svd_tall(const Matrix<Scalar>& a, bool want_u, Scalar tol, int max_sweeps)
{
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    SvdResult<Scalar> out;

    // Reduce tall inputs to their n x n triangular factor first.
    const bool precondition = m > n;
    Matrix<Scalar> work;
    Eigen::HouseholderQR<Matrix<Scalar>> qr;
    if (precondition) {
        qr.compute(a);
        work = qr.matrixQR().topRows(n).template triangularView<Eigen::Upper>();
    } else {
        work = a;
    }

    // Noise level of the factor: anything this small is numerically zero.
    const Scalar noise = work.norm() * std::numeric_limits<Scalar>::epsilon() * Scalar(8 * std::max<Eigen::Index>(n, 1));
    Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);
    out.sweeps = hestenes_sweeps(work, v, tol, noise * noise, max_sweeps);

    Vector<Scalar> sigma(n);
    for (Eigen::Index j = 0; j < n; ++j) sigma(j) = work.col(j).norm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return sigma(x) > sigma(y); });

    out.singular.resize(n);
    out.v.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Scalar sv = sigma(order[static_cast<std::size_t>(j)]);
        out.singular(j) = sv > noise ? sv : Scalar(0);
        out.v.col(j) = v.col(order[static_cast<std::size_t>(j)]);
    }
    if (!want_u) return out;

    Matrix<Scalar> u_small(work.rows(), n);
    std::vector<bool> missing(static_cast<std::size_t>(n), false);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(j)];
        if (sigma(src) > noise) {
            u_small.col(j) = work.col(src) / sigma(src);
        } else {
            u_small.col(j).setZero();
            missing[static_cast<std::size_t>(j)] = true;
        }
    }
    complete_orthonormal(u_small, missing);
    if (precondition) {
        out.u = qr.householderQ() * (Matrix<Scalar>(m, n) << u_small, Matrix<Scalar>::Zero(m - n, n)).finished();
    } else {
        out.u = std::move(u_small);
    }
    return out;
}

}  // namespace detail

// Thin SVD a = U diag(s) V^T with s descending. For m >= n the returned V is
// square (a complete basis of R^n); for m < n the returned U is square.
template <typename Derived>
SvdResult<typename Derived::Scalar> jacobi_svd(const Eigen::MatrixBase<Derived>& a, bool want_u = true,
                                               typename Derived::Scalar tol = default_svd_tolerance<typename Derived::Scalar>(),
                                               int max_sweeps = 80)
{
    using Scalar = typename Derived::Scalar;
    if (!a.allFinite()) throw NumericError("SVD input contains non-finite values");
    if (a.rows() >= a.cols()) return detail::jacobi_svd_tall<Scalar>(a.eval(), want_u, tol, max_sweeps);
    // Wide: decompose the transpose and swap the factors.
    auto t = detail::jacobi_svd_tall<Scalar>(a.transpose().eval(), true, tol, max_sweeps);
    SvdResult<Scalar> out;
    out.singular = std::move(t.singular);
    out.u = std::move(t.v);
    out.v = std::move(t.u);
    out.sweeps = t.sweeps;
    return out;
}

}  // namespace dlab
