#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/sym_matrix.hpp"

namespace fermigate {

/// Lowest eigenpairs of a symmetric (or symmetric-definite) problem.
struct EigenPairs {
    Vector values;               // ascending
    std::vector<Vector> vectors;  // vectors[i] belongs to values[i]
};

namespace detail {

/// Householder reduction A = Q T Qᵀ of a full symmetric matrix (lower triangle used).
struct Tridiagonal {
    Vector diag;
    Vector offdiag;  // offdiag[i] couples i and i+1; size n-1
    Matrix reflectors;  // column k below k+1 holds the k-th Householder vector (leading 1 implicit)
    Vector tau;
};

inline Tridiagonal tridiagonalize(Matrix a) {
    const std::size_t n = a.rows();
    Tridiagonal t;
    t.diag.assign(n, 0.0);
    t.offdiag.assign(n > 0 ? n - 1 : 0, 0.0);
    t.tau.assign(n > 0 ? n - 1 : 0, 0.0);
    Vector v(n), p(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t m = n - k - 1;  // length of the column below the diagonal
        double alpha = a(k + 1, k);
        double xnorm2 = 0.0;
        for (std::size_t i = k + 2; i < n; ++i) xnorm2 += a(i, k) * a(i, k);
        double tau = 0.0;
        double beta = alpha;
        if (xnorm2 > 0.0) {
            beta = -std::copysign(std::sqrt(alpha * alpha + xnorm2), alpha);
            tau = (beta - alpha) / beta;
            const double s = 1.0 / (alpha - beta);
            for (std::size_t i = k + 2; i < n; ++i) a(i, k) *= s;
        }
        t.diag[k] = a(k, k);
        t.offdiag[k] = beta;
        t.tau[k] = tau;
        if (tau == 0.0) continue;
        // v = (1, a(k+2..n-1, k)); p = tau * A22 v
        v[0] = 1.0;
        for (std::size_t i = 1; i < m; ++i) v[i] = a(k + 1 + i, k);
        for (std::size_t i = 0; i < m; ++i) p[i] = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto ai = a.row(k + 1 + i);
            // lower triangle: columns k+1 .. k+1+i
            double acc = 0.0;
            const double vi = v[i];
            for (std::size_t j = 0; j < i; ++j) {
                const double aij = ai[k + 1 + j];
                acc += aij * v[j];
                p[j] += aij * vi;
            }
            p[i] += acc + ai[k + 1 + i] * vi;
        }
        for (std::size_t i = 0; i < m; ++i) p[i] *= tau;
        double pv = 0.0;
        for (std::size_t i = 0; i < m; ++i) pv += p[i] * v[i];
        const double half = 0.5 * tau * pv;
        for (std::size_t i = 0; i < m; ++i) p[i] -= half * v[i];  // w
        for (std::size_t i = 0; i < m; ++i) {
            auto ai = a.row(k + 1 + i);
            const double vi = v[i];
            const double wi = p[i];
            for (std::size_t j = 0; j <= i; ++j) ai[k + 1 + j] -= vi * p[j] + wi * v[j];
        }
    }
    if (n >= 2) {
        t.diag[n - 2] = a(n - 2, n - 2);
        t.offdiag[n - 2] = a(n - 1, n - 2);
    }
    if (n >= 1) t.diag[n - 1] = a(n - 1, n - 1);
    t.reflectors = std::move(a);
    return t;
}

/// x <- Q x using the stored reflectors.
inline void apply_q(const Tridiagonal& t, std::span<double> x) {
    const std::size_t n = x.size();
    for (std::size_t kk = t.tau.size(); kk-- > 0;) {
        const double tau = t.tau[kk];
        if (tau == 0.0) continue;
        double s = x[kk + 1];
        for (std::size_t i = kk + 2; i < n; ++i) s += t.reflectors(i, kk) * x[i];
        s *= tau;
        x[kk + 1] -= s;
        for (std::size_t i = kk + 2; i < n; ++i) x[i] -= s * t.reflectors(i, kk);
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. When `z` is non-null its
/// columns are rotated along (eigenvector accumulation). Eigenvalues unsorted.
inline void tridiagonal_ql(Vector& d, Vector e, Matrix* z) {
    const std::size_t n = d.size();
    if (n == 0) return;
    e.push_back(0.0);  // e[i] couples i and i+1; e[n-1] = 0 sentinel
    double f = 0.0;
    double tst1 = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t m = l;
        while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;
        if (m > l) {
            std::size_t iter = 0;
            do {
                if (++iter > 60) throw NonConvergence("tridiagonal QL", iter, std::abs(e[l]));
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
                f += h;
                p = d[m];
                double c = 1.0, c2 = 1.0, c3 = 1.0;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (std::size_t ii = m; ii-- > l;) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[ii];
                    h = c * p;
                    r = std::hypot(p, e[ii]);
                    e[ii + 1] = s * r;
                    s = e[ii] / r;
                    c = p / r;
                    p = c * d[ii] - s * g;
                    d[ii + 1] = h + s * (c * g + s * d[ii]);
                    if (z != nullptr) {
                        for (std::size_t k = 0; k < z->rows(); ++k) {
                            auto zk = z->row(k);
                            h = zk[ii + 1];
                            zk[ii + 1] = s * zk[ii] + c * h;
                            zk[ii] = c * zk[ii] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] = d[l] + f;
        e[l] = 0.0;
    }
}

/// Deterministic start vectors for inverse iteration.
inline double unit_hash(std::uint64_t i) {
    i += 0x9E3779B97F4A7C15ULL;
    i = (i ^ (i >> 30)) * 0xBF58476D1CE4E5B9ULL;
    i = (i ^ (i >> 27)) * 0x94D049BB133111EBULL;
    i ^= i >> 31;
    return static_cast<double>(i >> 11) * 0x1.0p-53 - 0.5;
}

/// Eigenvector of an unreduced-or-split tridiagonal for a given eigenvalue via
/// inverse iteration with partial pivoting; `cluster` vectors are projected out.
inline Vector tridiagonal_inverse_iteration(const Vector& d, const Vector& e, double lambda,
                                            const std::vector<const Vector*>& cluster, std::uint64_t seed,
                                            double tnorm) {
    const std::size_t n = d.size();
    const double eps = std::numeric_limits<double>::epsilon();
    const double tiny = eps * std::max(tnorm, std::numeric_limits<double>::min());
    // Gaussian elimination with partial pivoting on T - lambda I. Rows are kept as
    // (u0, u1, u2) = (diag, super, super-super) after elimination, plus multipliers.
    Vector u0(n), u1(n, 0.0), u2(n, 0.0), mult(n, 0.0);
    std::vector<char> swapped(n, 0);
    {
        double cur0 = d[0] - lambda;
        double cur1 = n > 1 ? e[0] : 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double sub = e[i];
            const double nd = d[i + 1] - lambda;
            const double nsup = i + 2 < n ? e[i + 1] : 0.0;
            if (std::abs(cur0) >= std::abs(sub)) {
                const double m = cur0 != 0.0 ? sub / cur0 : 0.0;
                u0[i] = cur0;
                u1[i] = cur1;
                u2[i] = 0.0;
                mult[i] = m;
                cur0 = nd - m * cur1;
                cur1 = nsup;
            } else {
                swapped[i] = 1;
                const double m = cur0 / sub;
                u0[i] = sub;
                u1[i] = nd;
                u2[i] = nsup;
                mult[i] = m;
                cur0 = cur1 - m * nd;
                cur1 = -m * nsup;
            }
        }
        u0[n - 1] = cur0;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(u0[i]) < tiny) u0[i] = std::copysign(tiny, u0[i] == 0.0 ? 1.0 : u0[i]);

    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = unit_hash(seed * 1000003ULL + i);
    auto orthonormalize = [&](Vector& y) {
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector* q : cluster) axpy(-dot(*q, y), *q, y);
        const double nrm = norm2(y);
        if (nrm > 0.0) scale(y, 1.0 / nrm);
    };
    orthonormalize(x);
    for (int it = 0; it < 5; ++it) {
        // forward elimination on the right-hand side
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (swapped[i]) std::swap(x[i], x[i + 1]);
            x[i + 1] -= mult[i] * x[i];
        }
        // back substitution
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x[ii];
            if (ii + 1 < n) s -= u1[ii] * x[ii + 1];
            if (ii + 2 < n) s -= u2[ii] * x[ii + 2];
            x[ii] = s / u0[ii];
        }
        const double big = max_abs(x);
        if (!std::isfinite(big)) throw NonConvergence("tridiagonal inverse iteration overflow", it, big);
        if (big > 0.0) scale(x, 1.0 / big);
        orthonormalize(x);
    }
    return x;
}

}  // namespace detail

/// Lowest k eigenpairs of a dense symmetric matrix (only its lower triangle is read).
///
/// Householder tridiagonalization, implicit QL for the eigenvalues, and inverse
/// iteration on the tridiagonal for the requested vectors. Falls back to full
/// QL accumulation when k is a sizeable fraction of n.
inline EigenPairs symmetric_eigen_lowest(const Matrix& a, std::size_t k) {
    const std::size_t n = a.rows();
    require(a.rows() == a.cols(), "symmetric_eigen_lowest: matrix not square");
    require(k >= 1 && k <= n, "symmetric_eigen_lowest: k out of range");
    detail::Tridiagonal t = detail::tridiagonalize(a);
    double tnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = std::abs(t.diag[i]);
        if (i > 0) s += std::abs(t.offdiag[i - 1]);
        if (i + 1 < n) s += std::abs(t.offdiag[i]);
        tnorm = std::max(tnorm, s);
    }

    EigenPairs out;
    if (4 * k >= n || n <= 64) {
        Vector d = t.diag;
        Matrix z = Matrix::identity(n);
        detail::tridiagonal_ql(d, t.offdiag, &z);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
        for (std::size_t i = 0; i < k; ++i) {
            out.values.push_back(d[order[i]]);
            Vector v = z.column(order[i]);
            detail::apply_q(t, v);
            out.vectors.push_back(std::move(v));
        }
        return out;
    }

    Vector d = t.diag;
    detail::tridiagonal_ql(d, t.offdiag, nullptr);
    std::sort(d.begin(), d.end());
    const double eps = std::numeric_limits<double>::epsilon();
    const double cluster_gap = 1e-3 * tnorm;
    const double pertol = 10.0 * eps * std::max(tnorm, 1.0);
    std::vector<Vector> tvecs;
    tvecs.reserve(k);
    std::size_t cluster_start = 0;
    double last_shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        double shift = d[i];
        if (i > 0 && d[i] - d[i - 1] > cluster_gap) cluster_start = i;
        if (i > cluster_start && shift <= last_shift + pertol) shift = last_shift + pertol;
        last_shift = shift;
        std::vector<const Vector*> cluster;
        for (std::size_t j = cluster_start; j < i; ++j) cluster.push_back(&tvecs[j]);
        tvecs.push_back(detail::tridiagonal_inverse_iteration(t.diag, t.offdiag, shift, cluster, i + 1, tnorm));
    }
    for (std::size_t i = 0; i < k; ++i) {
        Vector v = tvecs[i];
        detail::apply_q(t, v);
        out.values.push_back(d[i]);
        out.vectors.push_back(std::move(v));
    }
    return out;
}

/// Lowest k eigenpairs of the symmetric-definite pencil (A, M) by dense reduction:
/// M = L Lᵀ, C = L⁻¹ A L⁻ᵀ, x = L⁻ᵀ y. Returned vectors are M-orthonormal.
inline EigenPairs generalized_eigen_lowest(const SymMatrix& a, const SymMatrix& m, std::size_t k) {
    require(a.dim() == m.dim(), "generalized_eigen_lowest: dimension mismatch");
    const std::size_t n = a.dim();
    const Matrix l = cholesky_lower(m);
    Matrix c = a.to_dense();
    solve_lower_inplace(l, c);  // L⁻¹ A
    c = transpose(c);
    solve_lower_inplace(l, c);  // L⁻¹ (L⁻¹ A)ᵀ = L⁻¹ A L⁻ᵀ
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double s = 0.5 * (c(i, j) + c(j, i));
            c(i, j) = s;
            c(j, i) = s;
        }
    EigenPairs ep = symmetric_eigen_lowest(c, k);
    Matrix y(n, k);
    for (std::size_t j = 0; j < k; ++j) y.set_column(j, ep.vectors[j]);
    solve_upper_t_inplace(l, y);
    for (std::size_t j = 0; j < k; ++j) {
        Vector x = y.column(j);
        const double nrm = std::sqrt(m.quadratic_form(x));
        scale(x, 1.0 / nrm);
        ep.vectors[j] = std::move(x);
    }
    return ep;
}

}  // namespace fermigate
