#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/sym_eigen.hpp"
#include "fermigate/sym_matrix.hpp"

namespace fermigate {

/// y = A x for a symmetric operator known only through its action.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct DavidsonOptions {
    std::size_t block = 0;          // 0: k + 2
    std::size_t max_subspace = 0;   // 0: max(8 * block, 48)
    std::size_t max_iterations = 400;
    double accept_tol = 0.0;        // on stagnation, return anyway if the residual is at most this
};

namespace detail {

/// Projects `y` against the orthonormal set `basis` twice and normalizes it.
/// Returns the norm retained after projection relative to the input norm.
inline double orthonormalize_against(const std::vector<Vector>& basis, Vector& y) {
    const double before = norm2(y);
    if (before == 0.0) return 0.0;
    for (int pass = 0; pass < 2; ++pass)
        for (const Vector& q : basis) axpy(-dot(q, y), q, y);
    const double after = norm2(y);
    if (after > 0.0) scale(y, 1.0 / after);
    return after / before;
}

}  // namespace detail

/// Lowest k eigenpairs of a symmetric operator by block Davidson with the
/// diagonal preconditioner (θ - D)⁻¹. Converged when every requested Ritz
/// residual is at most `tol` (absolute, Euclidean).
inline EigenPairs davidson_lowest(std::size_t n, const LinearOperator& apply, const Vector& diagonal, std::size_t k,
                                  double tol, DavidsonOptions opts = {}) {
    require(k >= 1 && k <= n, "davidson_lowest: k out of range");
    require(diagonal.size() == n, "davidson_lowest: diagonal size mismatch");
    const std::size_t block = std::min(n, opts.block != 0 ? opts.block : k + 2);
    const std::size_t max_sub = std::min(n, std::max(opts.max_subspace != 0 ? opts.max_subspace : 8 * block,
                                                      std::size_t{48}));

    std::vector<Vector> v;
    std::vector<Vector> av;
    auto push = [&](Vector x) {
        Vector y(n);
        apply(x, y);
        v.push_back(std::move(x));
        av.push_back(std::move(y));
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return diagonal[a] < diagonal[b]; });
    for (std::size_t i = 0; i < block; ++i) {
        Vector e(n, 0.0);
        e[order[i]] = 1.0;
        push(std::move(e));
    }

    Matrix t;
    double last_residual = 0.0;
    EigenPairs best;
    double best_residual = std::numeric_limits<double>::infinity();
    std::size_t best_iter = 0;
    for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
        const std::size_t m = v.size();
        t = Matrix(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double s = 0.5 * (dot(v[i], av[j]) + dot(v[j], av[i]));
                t(i, j) = s;
                t(j, i) = s;
            }
        const std::size_t nritz = std::min(block, m);
        const EigenPairs ritz = symmetric_eigen_lowest(t, nritz);

        std::vector<Vector> x(nritz, Vector(n, 0.0));
        std::vector<Vector> ax(nritz, Vector(n, 0.0));
        std::vector<Vector> r(nritz);
        std::vector<double> rnorm(nritz);
        for (std::size_t i = 0; i < nritz; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                axpy(ritz.vectors[i][j], v[j], x[i]);
                axpy(ritz.vectors[i][j], av[j], ax[i]);
            }
            r[i] = ax[i];
            axpy(-ritz.values[i], x[i], r[i]);
            rnorm[i] = norm2(r[i]);
        }
        last_residual = *std::max_element(rnorm.begin(), rnorm.begin() + std::min(k, nritz));
        if (nritz >= k) {
            best.values.assign(ritz.values.begin(), ritz.values.begin() + static_cast<std::ptrdiff_t>(k));
            best.vectors.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k));
            if (last_residual <= tol) return best;
            if (last_residual < 0.5 * best_residual) {
                best_residual = last_residual;
                best_iter = iter;
            } else if (iter > best_iter + 30) {
                // no halving of the residual for 30 sweeps: rounding floor reached
                if (last_residual <= opts.accept_tol) return best;
                throw NonConvergence("Davidson: residual stagnated", iter, last_residual);
            }
        }

        if (m + block > max_sub) {
            v.clear();
            av.clear();
            for (std::size_t i = 0; i < nritz; ++i) {
                Vector xi = x[i];
                Vector axi = ax[i];
                // Ritz vectors are orthonormal up to rounding; re-orthonormalize to stay safe.
                const double nrm_before = norm2(xi);
                for (std::size_t j = 0; j < v.size(); ++j) {
                    const double c = dot(v[j], xi);
                    axpy(-c, v[j], xi);
                    axpy(-c, av[j], axi);
                }
                const double nrm = norm2(xi);
                if (nrm <= 1e-10 * nrm_before) continue;
                scale(xi, 1.0 / nrm);
                scale(axi, 1.0 / nrm);
                v.push_back(std::move(xi));
                av.push_back(std::move(axi));
            }
        }

        std::size_t added = 0;
        for (std::size_t i = 0; i < nritz; ++i) {
            if (rnorm[i] <= tol) continue;
            Vector c(n);
            const double theta = ritz.values[i];
            const double floor = 1e-8 * std::max(1.0, std::abs(theta));
            for (std::size_t j = 0; j < n; ++j) {
                double den = theta - diagonal[j];
                if (std::abs(den) < floor) den = std::copysign(floor, den == 0.0 ? 1.0 : den);
                c[j] = r[i][j] / den;
            }
            if (detail::orthonormalize_against(v, c) < 1e-10) {
                // preconditioned direction collapsed; fall back to the raw residual
                c = r[i];
                if (detail::orthonormalize_against(v, c) < 1e-10) continue;
            }
            push(std::move(c));
            ++added;
        }
        if (added == 0) {
            if (!best.values.empty() && last_residual <= opts.accept_tol) return best;
            throw NonConvergence("Davidson: subspace stagnated", iter, last_residual);
        }
    }
    if (!best.values.empty() && last_residual <= opts.accept_tol) return best;
    throw NonConvergence("Davidson", opts.max_iterations, last_residual);
}

struct SubspaceOptions {
    std::size_t extra = 0;           // block = k + extra; 0: max(4, k)
    std::size_t max_iterations = 500;
    double rel_tol = 1e-11;
};

/// Lowest k eigenpairs of the pencil (A, M) by shift-invert subspace iteration.
///
/// The shift starts at 0 and moves down until A - σM factors with positive
/// pivots, so σ sits below the spectrum. Iterates are kept M-orthonormal by the
/// Rayleigh–Ritz step.
inline EigenPairs shift_invert_lowest(const SymMatrix& a, const SymMatrix& m, std::size_t k,
                                      SubspaceOptions opts = {}) {
    const std::size_t n = a.dim();
    require(m.dim() == n, "shift_invert_lowest: dimension mismatch");
    require(k >= 1 && k <= n, "shift_invert_lowest: k out of range");
    const std::size_t p = std::min(n, k + (opts.extra != 0 ? opts.extra : std::max<std::size_t>(4, k)));

    std::vector<std::size_t> merged(n);
    for (std::size_t i = 0; i < n; ++i) merged[i] = std::min(a.first_col(i), m.first_col(i));
    auto embed = [&](const SymMatrix& s) {
        SymMatrix out(merged);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = s.first_col(i); j <= i; ++j) out.set(i, j, s(i, j));
        return out;
    };
    const SymMatrix ae = embed(a);
    const SymMatrix me = embed(m);
    const double anorm = a.norm1();
    const double mnorm = m.norm1();

    double sigma = 0.0;
    std::optional<ProfileLdlt> fact;
    for (int attempt = 0; attempt < 80; ++attempt) {
        ProfileLdlt f(ae.plus(me, -sigma));
        if (f.positive_definite()) {
            fact.emplace(std::move(f));
            break;
        }
        sigma = sigma == 0.0 ? -std::max(1.0, 1e-3 * anorm / std::max(mnorm, 1e-300)) : 2.0 * sigma;
    }
    if (!fact) throw IndefiniteMatrix("shift_invert_lowest: no shift below the spectrum found", 0);

    std::vector<Vector> x(p, Vector(n));
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < n; ++i) x[j][i] = detail::unit_hash(7919ULL * (j + 1) + i);

    Vector prev;
    double worst = 0.0;
    for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
        std::vector<Vector> y(p);
        for (std::size_t j = 0; j < p; ++j) y[j] = fact->solve(me.multiply(x[j]));
        std::vector<Vector> ay(p), my(p);
        for (std::size_t j = 0; j < p; ++j) {
            ay[j] = a.multiply(y[j]);
            my[j] = m.multiply(y[j]);
        }
        SymMatrix ap = SymMatrix::dense(p);
        SymMatrix mp = SymMatrix::dense(p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                ap.set(i, j, 0.5 * (dot(y[i], ay[j]) + dot(y[j], ay[i])));
                mp.set(i, j, 0.5 * (dot(y[i], my[j]) + dot(y[j], my[i])));
            }
        const EigenPairs small = generalized_eigen_lowest(ap, mp, p);
        for (std::size_t j = 0; j < p; ++j) {
            Vector xj(n, 0.0);
            for (std::size_t i = 0; i < p; ++i) axpy(small.vectors[j][i], y[i], xj);
            x[j] = std::move(xj);
        }
        worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            Vector r = a.multiply(x[j]);
            axpy(-small.values[j], m.multiply(x[j]), r);
            const double scale_j = anorm + std::abs(small.values[j]) * mnorm;
            worst = std::max(worst, norm2(r) / scale_j);
        }
        if (worst <= opts.rel_tol) {
            EigenPairs out;
            for (std::size_t j = 0; j < k; ++j) {
                out.values.push_back(small.values[j]);
                out.vectors.push_back(x[j]);
            }
            return out;
        }
    }
    throw NonConvergence("shift-invert subspace iteration", opts.max_iterations, worst);
}

}  // namespace fermigate
