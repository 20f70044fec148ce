#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/iterative_eigen.hpp"
#include "fermigate/manybody.hpp"
#include "fermigate/sp_spectrum.hpp"
#include "fermigate/sym_eigen.hpp"
#include "fermigate/sym_matrix.hpp"

namespace fermigate {

struct MbSolverOptions {
    std::size_t dense_limit = 1500;  // direct tridiagonal path at or below this dimension
    double target_rel_tol = 1e-12;   // iterative target, relative to ‖H‖₁
    double accept_rel_tol = 1e-9;    // accepted when rounding stalls the iteration
};

/// Lowest k eigenpairs of a many-body operator (Euclidean-orthonormal vectors).
inline SpectralResult solve_mb_eig(const ManyBodyOperator& h, std::size_t k, MbSolverOptions opts = {}) {
    const std::size_t n = h.dim();
    require(k >= 1 && k <= n, "solve_mb_eig: k out of range");
    const double scale = std::max(1.0, h.norm1());
    EigenPairs ep;
    if (n <= opts.dense_limit) {
        ep = symmetric_eigen_lowest(h.to_matrix(), k);
    } else {
        DavidsonOptions dopt;
        dopt.accept_tol = opts.accept_rel_tol * scale;
        ep = davidson_lowest(
            n, [&](std::span<const double> x, std::span<double> y) { h.apply(x, y); }, h.diagonal(), k,
            opts.target_rel_tol * scale, dopt);
    }
    SpectralResult r;
    r.k_requested = k;
    r.eigenvalues = std::move(ep.values);
    r.eigenvectors = std::move(ep.vectors);
    for (std::size_t i = 0; i < k; ++i) {
        Vector res = h.apply(r.eigenvectors[i]);
        axpy(-r.eigenvalues[i], r.eigenvectors[i], res);
        r.residuals.push_back(norm2(res));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Degeneracy classification
// ---------------------------------------------------------------------------

enum class DegeneracyVerdict { NonDegenerate, Degenerate, Inconclusive };

inline std::string to_string(DegeneracyVerdict v) {
    switch (v) {
        case DegeneracyVerdict::NonDegenerate: return "non-degenerate";
        case DegeneracyVerdict::Degenerate: return "degenerate";
        case DegeneracyVerdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

struct DegeneracyLevel {
    std::size_t n_cells = 0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double gap = 0.0;  // λ₂ − λ₁, set to 0 below the floor
};

struct DegeneracyReport {
    DegeneracyLevel coarse;
    DegeneracyLevel fine;
    double refinement_ratio = 0.0;  // gap(h/2) / gap(h); 0 when the fine gap is 0
    double discretization_error_estimate = 0.0;  // |λ₁(h) − λ₁(h/2)|
    double gap_floor_rel = 1e-6;
    DegeneracyVerdict verdict = DegeneracyVerdict::Inconclusive;
};

/// Verdict from the two levels: non-degenerate when gap(h/2) > 4·|λ₁(h) − λ₁(h/2)|,
/// degenerate when gap(h/2)/gap(h) ≤ 0.5, inconclusive otherwise. Gaps below
/// gap_floor_rel · max(1, |λ₂|) count as exactly zero.
inline DegeneracyReport degeneracy_from_levels(DegeneracyLevel coarse, DegeneracyLevel fine,
                                               double gap_floor_rel = 1e-6) {
    auto floor_gap = [&](DegeneracyLevel& l) {
        l.gap = l.lambda2 - l.lambda1;
        if (l.gap <= gap_floor_rel * std::max(1.0, std::abs(l.lambda2))) l.gap = 0.0;
    };
    floor_gap(coarse);
    floor_gap(fine);
    DegeneracyReport r;
    r.coarse = coarse;
    r.fine = fine;
    r.gap_floor_rel = gap_floor_rel;
    r.discretization_error_estimate = std::abs(coarse.lambda1 - fine.lambda1);
    if (fine.gap == 0.0)
        r.refinement_ratio = 0.0;
    else if (coarse.gap == 0.0)
        r.refinement_ratio = std::numeric_limits<double>::infinity();
    else
        r.refinement_ratio = fine.gap / coarse.gap;
    if (fine.gap > 4.0 * r.discretization_error_estimate)
        r.verdict = DegeneracyVerdict::NonDegenerate;
    else if (r.refinement_ratio <= 0.5)
        r.verdict = DegeneracyVerdict::Degenerate;
    else
        r.verdict = DegeneracyVerdict::Inconclusive;
    return r;
}

/// Lowest two many-body levels of (v, w, bc, N) on one grid, with eigen-orbitals.
inline std::pair<ManyBodyOperator, SpectralResult> solve_problem(const PotentialSpec& v, const InteractionSpec& w,
                                                                 const BoundarySpec& bc, std::size_t n_particles,
                                                                 std::size_t n_cells, std::size_t k,
                                                                 MbSolverOptions opts = {}) {
    const GridBasis grid(n_cells, bc);
    ManyBodyOperator h = assemble_manybody(eigen_orbitals(grid, v), v, w, n_particles);
    SpectralResult sr = solve_mb_eig(h, std::min(k, h.dim()), opts);
    return {std::move(h), std::move(sr)};
}

inline DegeneracyReport classify_degeneracy(const PotentialSpec& v, const InteractionSpec& w, const BoundarySpec& bc,
                                            std::size_t n_particles, std::pair<std::size_t, std::size_t> grids,
                                            MbSolverOptions opts = {}) {
    require(grids.second == 2 * grids.first, "grids must be (n, 2n)");
    auto level = [&](std::size_t n_cells) {
        const auto [h, sr] = solve_problem(v, w, bc, n_particles, n_cells, 2, opts);
        require(sr.eigenvalues.size() >= 2, "degeneracy classification needs at least two states");
        return DegeneracyLevel{n_cells, sr.eigenvalues[0], sr.eigenvalues[1], 0.0};
    };
    return degeneracy_from_levels(level(grids.first), level(grids.second));
}

// ---------------------------------------------------------------------------
// Inverse iteration
// ---------------------------------------------------------------------------

struct InverseIterationResult {
    WaveVector psi;
    double eigenvalue = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
};

struct InverseIterationOptions {
    std::size_t dense_limit = 2000;
    std::size_t max_iterations = 5000;
    std::size_t cg_max_iterations = 20000;
};

namespace detail {

/// Conjugate gradients on (H − σ I) y = b. A non-positive curvature means the
/// shifted operator is not positive definite, i.e. σ ≥ λ₁.
inline Vector shifted_cg(const ManyBodyOperator& h, double sigma, const Vector& b, std::size_t max_it, double rtol) {
    const std::size_t n = b.size();
    Vector x(n, 0.0), r = b, p = b, ap(n);
    double rr = dot(r, r);
    const double stop = rtol * rtol * rr;
    for (std::size_t it = 0; it < max_it; ++it) {
        if (rr <= stop) return x;
        h.apply(p, ap);
        axpy(-sigma, p, ap);
        const double curv = dot(p, ap);
        if (!(curv > 0.0)) throw IndefiniteMatrix("inverse iteration: shift is not below the lowest eigenvalue", it);
        const double alpha = rr / curv;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        const double rr_new = dot(r, r);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw NonConvergence("inverse iteration: inner CG", max_it, std::sqrt(rr));
}

}  // namespace detail

/// Ground state by inverse iteration with a fixed shift below λ₁.
///
/// The shifted operator is factored (dense LDLᵀ) or solved by CG; a negative
/// pivot or negative curvature reports a shift at or above λ₁. Converged when
/// ‖Hψ − θψ‖ ≤ tol · max(1, ‖H‖₁). The sign is fixed so the largest-magnitude
/// coefficient is positive.
inline InverseIterationResult inverse_iteration_ground(const ManyBodyOperator& h, double shift, double tol,
                                                       InverseIterationOptions opts = {}) {
    const std::size_t n = h.dim();
    const double hnorm = std::max(1.0, h.norm1());
    std::optional<ProfileLdlt> fact;
    if (n <= opts.dense_limit) {
        SymMatrix a = h.dense();
        for (std::size_t i = 0; i < n; ++i) a.add(i, i, -shift);
        fact.emplace(a);
        if (fact->negative_pivots() > 0 || fact->zero_pivots() > 0 ||
            std::any_of(fact->pivots().begin(), fact->pivots().end(), [](double d) { return !(d > 0.0); }))
            throw IndefiniteMatrix("inverse iteration: shift is not below the lowest eigenvalue", 0);
    }

    // start: lowest diagonal entry plus a deterministic spread over all entries
    Vector x(n);
    const auto& d = h.diagonal();
    const std::size_t i0 = static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin());
    for (std::size_t i = 0; i < n; ++i) x[i] = 1e-3 * detail::unit_hash(104729ULL + i);
    x[i0] += 1.0;
    scale(x, 1.0 / norm2(x));

    InverseIterationResult out;
    double prev_res = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
        Vector y = fact ? fact->solve(x) : detail::shifted_cg(h, shift, x, opts.cg_max_iterations, 1e-14);
        scale(y, 1.0 / norm2(y));
        x = std::move(y);
        const Vector hx = h.apply(x);
        const double theta = dot(x, hx);
        Vector r = hx;
        axpy(-theta, x, r);
        const double res = norm2(r);
        out.iterations = it;
        out.eigenvalue = theta;
        out.residual = res;
        if (res <= tol * hnorm) break;
        stall = res < 0.999 * prev_res ? 0 : stall + 1;
        if (stall > 50) throw NonConvergence("inverse iteration stagnated", it, res);
        prev_res = res;
        if (it == opts.max_iterations) throw NonConvergence("inverse iteration", it, res);
    }
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(x[i]) > std::abs(x[imax])) imax = i;
    if (x[imax] < 0.0) scale(x, -1.0);
    out.psi = WaveVector{std::move(x), true};
    return out;
}

}  // namespace fermigate
