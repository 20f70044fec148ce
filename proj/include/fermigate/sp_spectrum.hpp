#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/iterative_eigen.hpp"
#include "fermigate/sym_eigen.hpp"
#include "fermigate/sym_matrix.hpp"

namespace fermigate {

/// Lowest eigenpairs of a symmetric pencil with their residual norms.
struct SpectralResult {
    Vector eigenvalues;               // ascending
    std::vector<Vector> eigenvectors;  // M-orthonormal (Euclidean for standard problems)
    Vector residuals;                 // ‖A x - λ M x‖₂
    std::size_t k_requested = 0;
};

struct SpSolverOptions {
    std::size_t dense_limit = 5000;  // dense reduction at or below this dimension
};

/// Entrywise sum of two symmetric matrices whose profiles may differ.
inline SymMatrix add_symmetric(const SymMatrix& a, const SymMatrix& b) {
    require(a.dim() == b.dim(), "add_symmetric: dimension mismatch");
    if (a.profile() == b.profile()) return a.plus(b);
    std::vector<std::size_t> first(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) first[i] = std::min(a.first_col(i), b.first_col(i));
    SymMatrix out(first);
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = first[i]; j <= i; ++j) out.set(i, j, a(i, j) + b(i, j));
    return out;
}

/// Lowest k eigenpairs of (K + P) x = λ M x.
inline SpectralResult solve_sp_eig(const SymMatrix& k_mat, const SymMatrix& p_mat, const SymMatrix& m_mat,
                                   std::size_t k, SpSolverOptions opts = {}) {
    const std::size_t n = m_mat.dim();
    require(k_mat.dim() == n && p_mat.dim() == n, "solve_sp_eig: dimension mismatch");
    require(k >= 1 && k <= n, "solve_sp_eig: k out of range");
    const SymMatrix a = add_symmetric(k_mat, p_mat);
    EigenPairs ep = n <= opts.dense_limit ? generalized_eigen_lowest(a, m_mat, k) : shift_invert_lowest(a, m_mat, k);

    SpectralResult r;
    r.k_requested = k;
    r.eigenvalues = std::move(ep.values);
    r.eigenvectors = std::move(ep.vectors);
    for (std::size_t i = 0; i < k; ++i) {
        Vector res = a.multiply(r.eigenvectors[i]);
        axpy(-r.eigenvalues[i], m_mat.multiply(r.eigenvectors[i]), res);
        r.residuals.push_back(norm2(res));
    }
    return r;
}

/// Convenience: assemble and solve on a basis.
inline SpectralResult solve_sp_eig(const GridBasis& basis, const PotentialSpec& v, std::size_t k,
                                   SpSolverOptions opts = {}) {
    return solve_sp_eig(assemble_stiffness(basis), assemble_potential(basis, v), assemble_overlap(basis), k, opts);
}

// ---------------------------------------------------------------------------
// Gap laws
// ---------------------------------------------------------------------------

enum class GapVerdict { Strict, Degenerate, Violation };

inline std::string to_string(GapVerdict v) {
    switch (v) {
        case GapVerdict::Strict: return "strict";
        case GapVerdict::Degenerate: return "degenerate-within-tolerance";
        case GapVerdict::Violation: return "violation";
    }
    return "unknown";
}

struct GapEntry {
    std::size_t lower_index = 0;  // 1-based index i of the pair (λ_i, λ_{i+1})
    double lower = 0.0;
    double upper = 0.0;
    double gap = 0.0;
    double threshold = 0.0;  // the gap counts strict when gap > threshold
    bool asserted_strict = false;
    GapVerdict verdict = GapVerdict::Degenerate;
};

struct GapReport {
    double tolerance = 0.0;
    std::vector<GapEntry> entries;

    [[nodiscard]] bool has_violation() const {
        return std::any_of(entries.begin(), entries.end(),
                           [](const GapEntry& e) { return e.verdict == GapVerdict::Violation; });
    }
};

/// Whether the gap law forces λ_i < λ_{i+1} (1-based i) for this boundary condition.
///
/// Coupled conditions with ψ(0) = α ψ(1): α > 0 forces the odd pairs, α < 0 the
/// even ones. Separable conditions make every eigenvalue simple.
inline bool gap_law_asserts(const BoundarySpec& bc, std::size_t lower_index) {
    if (bc.separable()) return true;
    const double alpha = bc.kind == BoundarySpec::Kind::Line ? bc.a / bc.b : bc.alpha;
    const bool odd = lower_index % 2 == 1;
    return alpha > 0.0 ? odd : !odd;
}

namespace detail {

inline GapEntry classify_gap(std::size_t i, double lower, double upper, double threshold, bool asserted) {
    GapEntry e;
    e.lower_index = i;
    e.lower = lower;
    e.upper = upper;
    e.gap = upper - lower;
    e.threshold = threshold;
    e.asserted_strict = asserted;
    if (e.gap > threshold)
        e.verdict = GapVerdict::Strict;
    else
        e.verdict = asserted ? GapVerdict::Violation : GapVerdict::Degenerate;
    return e;
}

}  // namespace detail

/// Single-grid gap report: a gap is strict when it exceeds deg_tol · max(1, |λ|).
inline GapReport gap_report(const SpectralResult& result, const BoundarySpec& bc, double deg_tol = 1e-6) {
    require(result.eigenvalues.size() >= 2, "gap_report needs at least two eigenvalues");
    GapReport r;
    r.tolerance = deg_tol;
    const auto& ev = result.eigenvalues;
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
        const double thr = deg_tol * std::max({1.0, std::abs(ev[i]), std::abs(ev[i + 1])});
        r.entries.push_back(detail::classify_gap(i + 1, ev[i], ev[i + 1], thr, gap_law_asserts(bc, i + 1)));
    }
    return r;
}

/// Two-grid gap report: the fine-grid gap counts strict only when it exceeds
/// 4x the larger coarse-to-fine eigenvalue shift of the pair (and the deg_tol floor).
inline GapReport gap_report_refined(const SpectralResult& coarse, const SpectralResult& fine, const BoundarySpec& bc,
                                    double deg_tol = 1e-6) {
    const std::size_t count = std::min(coarse.eigenvalues.size(), fine.eigenvalues.size());
    require(count >= 2, "gap_report_refined needs at least two eigenvalues per grid");
    GapReport r;
    r.tolerance = deg_tol;
    for (std::size_t i = 0; i + 1 < count; ++i) {
        const double lo = fine.eigenvalues[i];
        const double hi = fine.eigenvalues[i + 1];
        const double est = std::max(std::abs(coarse.eigenvalues[i] - lo), std::abs(coarse.eigenvalues[i + 1] - hi));
        const double floor = deg_tol * std::max({1.0, std::abs(lo), std::abs(hi)});
        r.entries.push_back(
            detail::classify_gap(i + 1, lo, hi, std::max(4.0 * est, floor), gap_law_asserts(bc, i + 1)));
    }
    return r;
}

}  // namespace fermigate
