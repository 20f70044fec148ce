#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/sym_matrix.hpp"

namespace fermigate {

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

/// Boundary-trace subspace L ⊂ ℝ² defining the form domain H¹_L(0, 1).
struct BoundarySpec {
    enum class Kind { DirichletBoth, DirichletLeft, DirichletRight, Free, QuasiPeriodic, Line };

    Kind kind = Kind::DirichletBoth;
    double alpha = 0.0;  // QuasiPeriodic: ψ(0) = α ψ(1)
    double a = 0.0;      // Line: L = span{(a, b)}
    double b = 0.0;

    static BoundarySpec dirichlet() { return {Kind::DirichletBoth}; }
    static BoundarySpec dirichlet_left() { return {Kind::DirichletLeft}; }
    static BoundarySpec dirichlet_right() { return {Kind::DirichletRight}; }
    static BoundarySpec free() { return {Kind::Free}; }
    static BoundarySpec quasi_periodic(double alpha) {
        require(std::isfinite(alpha) && alpha != 0.0, "quasi-periodic alpha must be finite and nonzero");
        return {Kind::QuasiPeriodic, alpha};
    }
    static BoundarySpec line(double a, double b) {
        require(std::isfinite(a) && std::isfinite(b) && (a != 0.0 || b != 0.0),
                "line boundary direction must be a finite nonzero vector");
        return {Kind::Line, 0.0, a, b};
    }

    /// Trace pair of the single coupled boundary dof, if this condition has one.
    [[nodiscard]] std::optional<std::array<double, 2>> coupled_trace() const {
        if (kind == Kind::QuasiPeriodic) return std::array<double, 2>{alpha, 1.0};
        if (kind == Kind::Line) return std::array<double, 2>{a, b};
        return std::nullopt;
    }

    /// True when the boundary condition does not couple the two endpoints.
    [[nodiscard]] bool separable() const {
        if (kind == Kind::Line) return a == 0.0 || b == 0.0;
        return kind != Kind::QuasiPeriodic;
    }

    [[nodiscard]] std::string name() const {
        switch (kind) {
            case Kind::DirichletBoth: return "dirichlet";
            case Kind::DirichletLeft: return "dirichlet-left";
            case Kind::DirichletRight: return "dirichlet-right";
            case Kind::Free: return "free";
            case Kind::QuasiPeriodic: return "quasiperiodic";
            case Kind::Line: return "line";
        }
        return "unknown";
    }

    friend bool operator==(const BoundarySpec&, const BoundarySpec&) = default;
};

// ---------------------------------------------------------------------------
// Grid basis
// ---------------------------------------------------------------------------

/// One basis function: a weighted sum of nodal hats plus its boundary trace.
struct DofDescriptor {
    std::vector<std::pair<std::size_t, double>> support;  // (node, weight)
    double trace0 = 0.0;
    double trace1 = 0.0;
};

/// P1 hat basis on the uniform grid x_i = i h, i = 0..n_cells, restricted to H¹_L.
///
/// Interior hats come first in node order; a Dirichlet-free endpoint keeps its
/// own hat in node order; a coupled (quasi-periodic / line) endpoint pair is a
/// single dof placed last.
class GridBasis {
public:
    GridBasis(std::size_t n_cells, BoundarySpec bc) : n_cells_(n_cells), bc_(bc) {
        require(n_cells >= 4, "grid needs at least 4 cells");
        if (bc.kind == BoundarySpec::Kind::QuasiPeriodic)
            require(std::isfinite(bc.alpha) && bc.alpha != 0.0, "alpha must be nonzero");
        if (bc.kind == BoundarySpec::Kind::Line)
            require(bc.a != 0.0 || bc.b != 0.0, "line boundary direction must be nonzero");
        h_ = 1.0 / static_cast<double>(n_cells);
        node_dof_.assign(n_cells + 1, std::nullopt);

        const bool keep_left = bc.kind == BoundarySpec::Kind::Free || bc.kind == BoundarySpec::Kind::DirichletRight;
        const bool keep_right = bc.kind == BoundarySpec::Kind::Free || bc.kind == BoundarySpec::Kind::DirichletLeft;
        if (keep_left) add_dof({{0, 1.0}}, 1.0, 0.0);
        for (std::size_t i = 1; i < n_cells; ++i) add_dof({{i, 1.0}}, 0.0, 0.0);
        if (keep_right) add_dof({{n_cells, 1.0}}, 0.0, 1.0);
        if (const auto tr = bc.coupled_trace()) {
            std::vector<std::pair<std::size_t, double>> support;
            if ((*tr)[0] != 0.0) support.emplace_back(0, (*tr)[0]);
            if ((*tr)[1] != 0.0) support.emplace_back(n_cells, (*tr)[1]);
            add_dof(std::move(support), (*tr)[0], (*tr)[1]);
        }

        profile_.resize(dofs_.size());
        for (std::size_t d = 0; d < dofs_.size(); ++d) profile_[d] = d;
        for (std::size_t c = 0; c < n_cells_; ++c) {
            const auto l = node_dof_[c];
            const auto r = node_dof_[c + 1];
            if (l && r) {
                const auto [lo, hi] = std::minmax(l->first, r->first);
                profile_[hi] = std::min(profile_[hi], lo);
            }
        }
    }

    [[nodiscard]] std::size_t n_cells() const noexcept { return n_cells_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] const BoundarySpec& bc() const noexcept { return bc_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dofs_.size(); }
    [[nodiscard]] std::size_t node_count() const noexcept { return n_cells_ + 1; }
    [[nodiscard]] double node(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }
    [[nodiscard]] const std::vector<DofDescriptor>& dofs() const noexcept { return dofs_; }

    /// (dof, weight) owning node i, if any.
    [[nodiscard]] const std::optional<std::pair<std::size_t, double>>& node_dof(std::size_t i) const noexcept {
        return node_dof_[i];
    }

    /// Empty matrix with the sparsity profile every assembled operator shares.
    [[nodiscard]] SymMatrix empty_matrix() const { return SymMatrix(profile_); }

    /// Cell index and local coordinate t ∈ [0, 1] of a point in [0, 1].
    [[nodiscard]] std::pair<std::size_t, double> locate(double x) const {
        require(x >= 0.0 && x <= 1.0, "point outside [0, 1]");
        double s = x * static_cast<double>(n_cells_);
        const double r = std::round(s);
        if (std::abs(s - r) <= 1e-12 * std::max(1.0, s)) s = r;
        auto c = static_cast<std::size_t>(std::floor(s));
        if (c >= n_cells_) c = n_cells_ - 1;
        return {c, s - static_cast<double>(c)};
    }

    /// Values of every dof at x as sparse (dof, value) pairs.
    [[nodiscard]] std::vector<std::pair<std::size_t, double>> evaluate(double x) const {
        const auto [c, t] = locate(x);
        std::vector<std::pair<std::size_t, double>> out;
        const std::array<double, 2> hat{1.0 - t, t};
        for (int k = 0; k < 2; ++k) {
            const auto& nd = node_dof_[c + static_cast<std::size_t>(k)];
            if (!nd || hat[k] == 0.0) continue;
            auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == nd->first; });
            if (it == out.end())
                out.emplace_back(nd->first, nd->second * hat[k]);
            else
                it->second += nd->second * hat[k];
        }
        return out;
    }

    /// Nodal values (node_count entries) of the function with coefficients `coeffs`.
    [[nodiscard]] Vector nodal_values(std::span<const double> coeffs) const {
        require(coeffs.size() == dim(), "nodal_values: coefficient length mismatch");
        Vector v(node_count(), 0.0);
        for (std::size_t i = 0; i < node_count(); ++i)
            if (node_dof_[i]) v[i] = node_dof_[i]->second * coeffs[node_dof_[i]->first];
        return v;
    }

    /// Node-by-dof evaluation matrix E with E(i, d) = φ_d(x_i).
    [[nodiscard]] Matrix nodal_matrix() const {
        Matrix e(node_count(), dim());
        for (std::size_t i = 0; i < node_count(); ++i)
            if (node_dof_[i]) e(i, node_dof_[i]->first) = node_dof_[i]->second;
        return e;
    }

private:
    void add_dof(std::vector<std::pair<std::size_t, double>> support, double t0, double t1) {
        const std::size_t idx = dofs_.size();
        for (const auto& [node, w] : support) node_dof_[node] = std::make_pair(idx, w);
        dofs_.push_back({std::move(support), t0, t1});
    }

    std::size_t n_cells_;
    double h_;
    BoundarySpec bc_;
    std::vector<DofDescriptor> dofs_;
    std::vector<std::optional<std::pair<std::size_t, double>>> node_dof_;
    std::vector<std::size_t> profile_;
};

inline GridBasis build_grid_basis(std::size_t n_cells, BoundarySpec bc) { return GridBasis(n_cells, bc); }

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

struct NoPotential {
    friend bool operator==(const NoPotential&, const NoPotential&) = default;
};

/// strength · δ(x - x0); x0 may sit on an endpoint.
struct DeltaPotential {
    double x0 = 0.5;
    double strength = 0.0;
    friend bool operator==(const DeltaPotential&, const DeltaPotential&) = default;
};

/// Piecewise-linear potential given by its nodal values.
struct SampledPotential {
    Vector values;
    friend bool operator==(const SampledPotential&, const SampledPotential&) = default;
};

/// H⁻¹ functional v(φ) = alpha ∫ φ + Σ_c V_c ∫_c φ′ with V constant per cell.
struct HMinusOnePotential {
    double alpha = 0.0;
    Vector cell_values;
    friend bool operator==(const HMinusOnePotential&, const HMinusOnePotential&) = default;
};

using PotentialSpec = std::variant<NoPotential, DeltaPotential, SampledPotential, HMinusOnePotential>;

/// Samples f at the grid nodes.
template <class F>
SampledPotential sampled_from_function(std::size_t n_cells, F&& f) {
    SampledPotential s;
    s.values.resize(n_cells + 1);
    for (std::size_t i = 0; i <= n_cells; ++i) s.values[i] = f(static_cast<double>(i) / static_cast<double>(n_cells));
    return s;
}

namespace detail {

/// Adds a 2x2 cell matrix (in local hat numbering) into the dof matrix.
inline void scatter_cell(const GridBasis& basis, std::size_t cell, const std::array<std::array<double, 2>, 2>& local,
                         SymMatrix& out) {
    const std::array<std::optional<std::pair<std::size_t, double>>, 2> nd{basis.node_dof(cell),
                                                                          basis.node_dof(cell + 1)};
    for (int p = 0; p < 2; ++p) {
        if (!nd[p]) continue;
        for (int q = 0; q <= p; ++q) {
            if (!nd[q]) continue;
            const double wpq = nd[p]->second * nd[q]->second;
            if (p == q) {
                out.add(nd[p]->first, nd[p]->first, wpq * local[p][p]);
            } else {
                // off-diagonal local pair; when both hats belong to one dof the pair lands
                // on its diagonal twice
                const double v = wpq * local[p][q];
                if (nd[p]->first == nd[q]->first)
                    out.add(nd[p]->first, nd[p]->first, 2.0 * v);
                else
                    out.add(nd[p]->first, nd[q]->first, v);
            }
        }
    }
}

}  // namespace detail

/// Consistent P1 mass matrix M_ij = ∫ φ_i φ_j.
inline SymMatrix assemble_overlap(const GridBasis& basis) {
    SymMatrix m = basis.empty_matrix();
    const double h = basis.h();
    for (std::size_t c = 0; c < basis.n_cells(); ++c)
        detail::scatter_cell(basis, c, {{{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}}}, m);
    return m;
}

/// Stiffness matrix K_ij = ∫ φ_i′ φ_j′.
inline SymMatrix assemble_stiffness(const GridBasis& basis) {
    SymMatrix k = basis.empty_matrix();
    const double ih = 1.0 / basis.h();
    for (std::size_t c = 0; c < basis.n_cells(); ++c) detail::scatter_cell(basis, c, {{{ih, -ih}, {-ih, ih}}}, k);
    return k;
}

/// Potential matrix P_ij = v(φ_i φ_j).
inline SymMatrix assemble_potential(const GridBasis& basis, const PotentialSpec& v) {
    SymMatrix p = basis.empty_matrix();
    const double h = basis.h();
    std::visit(
        [&](const auto& pot) {
            using T = std::decay_t<decltype(pot)>;
            if constexpr (std::is_same_v<T, NoPotential>) {
                return;
            } else if constexpr (std::is_same_v<T, DeltaPotential>) {
                require(pot.x0 >= 0.0 && pot.x0 <= 1.0, "delta position must lie in [0, 1]");
                const auto vals = basis.evaluate(pot.x0);
                for (std::size_t a = 0; a < vals.size(); ++a)
                    for (std::size_t b = 0; b <= a; ++b) {
                        p.add(vals[a].first, vals[b].first, pot.strength * vals[a].second * vals[b].second);
                    }
            } else if constexpr (std::is_same_v<T, SampledPotential>) {
                require(pot.values.size() == basis.node_count(), "sampled potential needs one value per node");
                for (std::size_t c = 0; c < basis.n_cells(); ++c) {
                    const double v0 = pot.values[c];
                    const double v1 = pot.values[c + 1];
                    // ∫ (v0 L0 + v1 L1) L_p L_q over the cell, exact for linear v
                    const double m00 = h * (v0 / 4.0 + v1 / 12.0);
                    const double m01 = h * (v0 + v1) / 12.0;
                    const double m11 = h * (v0 / 12.0 + v1 / 4.0);
                    detail::scatter_cell(basis, c, {{{m00, m01}, {m01, m11}}}, p);
                }
            } else if constexpr (std::is_same_v<T, HMinusOnePotential>) {
                require(pot.cell_values.size() == basis.n_cells(), "H^-1 potential needs one V value per cell");
                for (std::size_t c = 0; c < basis.n_cells(); ++c) {
                    // alpha ∫ L_p L_q + V_c [L_p L_q] evaluated across the cell
                    const double a = pot.alpha;
                    const double vc = pot.cell_values[c];
                    detail::scatter_cell(basis, c,
                                         {{{a * h / 3.0 - vc, a * h / 6.0}, {a * h / 6.0, a * h / 3.0 + vc}}}, p);
                }
            }
        },
        v);
    return p;
}

/// Sampled relative form bound: the smallest C ≥ 0 with
/// |ψᵀPψ| ≤ ε ψᵀ(K + M)ψ + C ψᵀMψ over `trials` random coefficient vectors.
inline double estimate_form_bound(const GridBasis& basis, const PotentialSpec& v, double epsilon, std::size_t trials,
                                  std::uint64_t seed = 20240607) {
    require(epsilon > 0.0, "epsilon must be positive");
    require(trials >= 100, "at least 100 trials required");
    const SymMatrix m = assemble_overlap(basis);
    const SymMatrix k = assemble_stiffness(basis);
    const SymMatrix p = assemble_potential(basis, v);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double c = 0.0;
    Vector psi(basis.dim());
    for (std::size_t t = 0; t < trials; ++t) {
        for (double& x : psi) x = normal(rng);
        const double mass = m.quadratic_form(psi);
        const double h1 = k.quadratic_form(psi) + mass;
        const double pot = std::abs(p.quadratic_form(psi));
        c = std::max(c, (pot - epsilon * h1) / mass);
    }
    return c;
}

}  // namespace fermigate
