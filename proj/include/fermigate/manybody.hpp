#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/parallel.hpp"
#include "fermigate/slater_basis.hpp"
#include "fermigate/sp_spectrum.hpp"
#include "fermigate/sym_matrix.hpp"

namespace fermigate {

// ---------------------------------------------------------------------------
// Interactions
// ---------------------------------------------------------------------------

struct NoInteraction {
    friend bool operator==(const NoInteraction&, const NoInteraction&) = default;
};

/// w(ρ₂) = g ∫ ρ₂(x, x) dx.
struct DeltaContact {
    double g = 0.0;
    friend bool operator==(const DeltaContact&, const DeltaContact&) = default;
};

/// Kernel w(x_i, y_j) on the node grid, bilinearly interpolated.
struct SampledKernel {
    Matrix values;
    friend bool operator==(const SampledKernel&, const SampledKernel&) = default;
};

using InteractionSpec = std::variant<NoInteraction, DeltaContact, SampledKernel>;

inline bool is_zero_interaction(const InteractionSpec& w) {
    if (std::holds_alternative<NoInteraction>(w)) return true;
    if (const auto* d = std::get_if<DeltaContact>(&w)) return d->g == 0.0;
    return false;
}

inline void validate_interaction(const InteractionSpec& w, std::size_t node_count) {
    if (const auto* k = std::get_if<SampledKernel>(&w)) {
        require(k->values.rows() == node_count && k->values.cols() == node_count,
                "sampled kernel must be node_count x node_count");
        for (std::size_t i = 0; i < node_count; ++i)
            for (std::size_t j = 0; j < i; ++j)
                require(std::abs(k->values(i, j) - k->values(j, i)) <= 1e-14, "sampled kernel must be symmetric");
    }
}

template <class F>
SampledKernel sampled_kernel_from_function(std::size_t n_cells, F&& f) {
    SampledKernel k{Matrix(n_cells + 1, n_cells + 1)};
    const double h = 1.0 / static_cast<double>(n_cells);
    for (std::size_t i = 0; i <= n_cells; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = f(static_cast<double>(i) * h, static_cast<double>(j) * h);
            k.values(i, j) = v;
            k.values(j, i) = v;
        }
    return k;
}

// ---------------------------------------------------------------------------
// Orbitals
// ---------------------------------------------------------------------------

/// R = L⁻ᵀ for M = L Lᵀ, so Rᵀ M R = I. Columns of R are orbitals over the dofs.
inline Matrix orthonormalize_orbitals(const SymMatrix& m) {
    const Matrix l = cholesky_lower(m);
    Matrix r = Matrix::identity(m.dim());
    solve_lower_inplace(l, r);  // L⁻¹
    return transpose(r);
}

/// Orbitals over a grid: columns of `coefficients` are M-orthonormal functions.
struct OrbitalSet {
    GridBasis grid;
    Matrix coefficients;  // dim x n_orbitals
    Vector energies;      // filled for eigen-orbitals, empty otherwise

    [[nodiscard]] std::size_t size() const noexcept { return coefficients.cols(); }

    /// Orbital values at every grid node: node_count x n_orbitals.
    [[nodiscard]] Matrix nodal_values() const { return matmul(grid.nodal_matrix(), coefficients); }
};

inline OrbitalSet cholesky_orbitals(const GridBasis& grid) {
    return {grid, orthonormalize_orbitals(assemble_overlap(grid)), {}};
}

/// Eigenfunctions of the single-particle pencil (K + P, M), ascending.
inline OrbitalSet eigen_orbitals(const GridBasis& grid, const PotentialSpec& v) {
    const SpectralResult sp = solve_sp_eig(grid, v, grid.dim());
    Matrix c(grid.dim(), grid.dim());
    for (std::size_t j = 0; j < grid.dim(); ++j) c.set_column(j, sp.eigenvectors[j]);
    return {grid, std::move(c), sp.eigenvalues};
}

/// Rᵀ A R as a dense symmetric matrix.
inline SymMatrix transform_one_body(const SymMatrix& a, const Matrix& r) {
    require(a.dim() == r.rows(), "transform_one_body: dimension mismatch");
    const std::size_t n = r.cols();
    Matrix ar(r.rows(), n);
    for (std::size_t j = 0; j < n; ++j) ar.set_column(j, a.multiply(r.column(j)));
    const Matrix t = matmul_tn(r, ar);
    SymMatrix out = SymMatrix::dense(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) out.set(i, j, 0.5 * (t(i, j) + t(j, i)));
    return out;
}

// ---------------------------------------------------------------------------
// Two-body tensor
// ---------------------------------------------------------------------------

/// ⟨ab|w|cd⟩ = ∫∫ w(x, y) φ_a(x) φ_c(x) φ_b(y) φ_d(y), stored once per unordered
/// pair of unordered index pairs {a,c}, {b,d}.
class TwoBodyTensor {
public:
    TwoBodyTensor() = default;
    explicit TwoBodyTensor(std::size_t n_orbitals)
        : n_(n_orbitals), pairs_(n_orbitals * (n_orbitals + 1) / 2), data_(pairs_ * (pairs_ + 1) / 2, 0.0) {}

    [[nodiscard]] std::size_t n_orbitals() const noexcept { return n_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] std::size_t pair_count() const noexcept { return pairs_; }

    static std::size_t pair_index(std::size_t a, std::size_t c) noexcept {
        if (a < c) std::swap(a, c);
        return a * (a + 1) / 2 + c;
    }

    /// Entry for pair indices P = {a,c}, Q = {b,d}.
    [[nodiscard]] double pair_entry(std::size_t p, std::size_t q) const noexcept {
        if (p < q) std::swap(p, q);
        return data_[p * (p + 1) / 2 + q];
    }
    void set_pair_entry(std::size_t p, std::size_t q, double v) noexcept {
        if (p < q) std::swap(p, q);
        data_[p * (p + 1) / 2 + q] = v;
    }

    /// ⟨ab|cd⟩; zero for an empty tensor.
    [[nodiscard]] double operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const noexcept {
        if (data_.empty()) return 0.0;
        return pair_entry(pair_index(a, c), pair_index(b, d));
    }

    [[nodiscard]] double max_abs() const noexcept {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t n_ = 0;
    std::size_t pairs_ = 0;
    std::vector<double> data_;
};

namespace detail {

/// Four-point Gauss–Legendre rule on [0, 1].
inline constexpr std::array<double, 4> gl4_nodes{0.06943184420297371, 0.33000947820757187, 0.6699905217924281,
                                                  0.9305681557970262};
inline constexpr std::array<double, 4> gl4_weights{0.17392742256872692, 0.3260725774312731, 0.3260725774312731,
                                                    0.17392742256872692};

/// W = F B Fᵀ over pair rows of F, with B symmetric (given as a full matrix).
inline TwoBodyTensor pair_gram(const Matrix& f, const Matrix& b, std::size_t n_orbitals) {
    TwoBodyTensor t(n_orbitals);
    const std::size_t np = f.rows();
    const Matrix fb = matmul(f, b);
    parallel_for(np, [&](std::size_t p) {
        const auto fp = fb.row(p);
        for (std::size_t q = 0; q <= p; ++q) t.set_pair_entry(p, q, dot(fp, f.row(q)));
    }, 8);
    return t;
}

}  // namespace detail

/// Two-body tensor of w in the orbitals R (columns over the dofs of `grid`).
///
/// DeltaContact: each pair product φ_aφ_c is a quadratic per cell, written in
/// the Bernstein basis, so ∫ φ_aφ_cφ_bφ_d is an exact Gram contraction.
/// SampledKernel: four-point Gauss–Legendre per cell in each variable.
inline TwoBodyTensor transform_two_body(const InteractionSpec& w, const GridBasis& grid, const Matrix& r) {
    require(r.rows() == grid.dim(), "transform_two_body: orbital matrix does not match the basis");
    validate_interaction(w, grid.node_count());
    const std::size_t n = r.cols();
    if (std::holds_alternative<NoInteraction>(w)) return TwoBodyTensor(n);
    const Matrix phi = matmul(grid.nodal_matrix(), r);  // node x orbital
    const std::size_t cells = grid.n_cells();
    const double h = grid.h();
    const std::size_t np = n * (n + 1) / 2;

    if (const auto* dc = std::get_if<DeltaContact>(&w)) {
        if (dc->g == 0.0) return TwoBodyTensor(n);
        Matrix f(np, 3 * cells);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t c = 0; c <= a; ++c) {
                auto row = f.row(TwoBodyTensor::pair_index(a, c));
                for (std::size_t e = 0; e < cells; ++e) {
                    const double a0 = phi(e, a), a1 = phi(e + 1, a);
                    const double c0 = phi(e, c), c1 = phi(e + 1, c);
                    row[3 * e] = a0 * c0;
                    row[3 * e + 1] = 0.5 * (a0 * c1 + a1 * c0);
                    row[3 * e + 2] = a1 * c1;
                }
            }
        // Bernstein quadratic Gram matrix on a cell of length h, times g
        const double s = dc->g * h;
        const double g00 = s / 5.0, g01 = s / 10.0, g02 = s / 30.0, g11 = 2.0 * s / 15.0;
        Matrix b(3 * cells, 3 * cells);
        for (std::size_t e = 0; e < cells; ++e) {
            const std::size_t o = 3 * e;
            b(o, o) = g00;
            b(o, o + 1) = b(o + 1, o) = g01;
            b(o, o + 2) = b(o + 2, o) = g02;
            b(o + 1, o + 1) = g11;
            b(o + 1, o + 2) = b(o + 2, o + 1) = g01;
            b(o + 2, o + 2) = g00;
        }
        return detail::pair_gram(f, b, n);
    }

    const auto& kern = std::get<SampledKernel>(w).values;
    const std::size_t nq = 4 * cells;
    Vector xq(nq), wq(nq);
    for (std::size_t e = 0; e < cells; ++e)
        for (std::size_t q = 0; q < 4; ++q) {
            xq[4 * e + q] = (static_cast<double>(e) + detail::gl4_nodes[q]) * h;
            wq[4 * e + q] = detail::gl4_weights[q] * h;
        }
    // orbital values at quadrature points
    Matrix phq(nq, n);
    for (std::size_t e = 0; e < cells; ++e)
        for (std::size_t q = 0; q < 4; ++q) {
            const double t = detail::gl4_nodes[q];
            for (std::size_t a = 0; a < n; ++a) phq(4 * e + q, a) = (1.0 - t) * phi(e, a) + t * phi(e + 1, a);
        }
    // weighted kernel at quadrature point pairs
    Matrix b(nq, nq);
    for (std::size_t i = 0; i < nq; ++i) {
        const std::size_t ei = i / 4;
        const double ti = detail::gl4_nodes[i % 4];
        for (std::size_t j = 0; j < nq; ++j) {
            const std::size_t ej = j / 4;
            const double tj = detail::gl4_nodes[j % 4];
            const double k00 = kern(ei, ej), k01 = kern(ei, ej + 1), k10 = kern(ei + 1, ej), k11 = kern(ei + 1, ej + 1);
            const double kv = (1 - ti) * ((1 - tj) * k00 + tj * k01) + ti * ((1 - tj) * k10 + tj * k11);
            b(i, j) = wq[i] * kv * wq[j];
        }
    }
    Matrix f(np, nq);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t c = 0; c <= a; ++c) {
            auto row = f.row(TwoBodyTensor::pair_index(a, c));
            for (std::size_t q = 0; q < nq; ++q) row[q] = phq(q, a) * phq(q, c);
        }
    return detail::pair_gram(f, b, n);
}

// ---------------------------------------------------------------------------
// Many-body operator
// ---------------------------------------------------------------------------

/// Where a ManyBodyOperator came from: grid, orbitals, and the (v, w) pair.
struct ManyBodyContext {
    OrbitalSet orbitals;
    PotentialSpec v;
    InteractionSpec w;
};

/// Symmetric Hamiltonian over a SlaterBasis in an orthonormal-orbital
/// representation. Off-diagonal entries are kept in compressed rows of the
/// strict lower triangle; exact zeros are dropped.
class ManyBodyOperator {
public:
    static constexpr std::size_t dense_cap = 6000;

    ManyBodyOperator() = default;
    ManyBodyOperator(SlaterBasis basis, Vector diagonal, std::vector<std::size_t> row_ptr,
                     std::vector<std::uint32_t> cols, Vector vals)
        : basis_(std::move(basis)),
          diag_(std::move(diagonal)),
          row_ptr_(std::move(row_ptr)),
          cols_(std::move(cols)),
          vals_(std::move(vals)) {}

    [[nodiscard]] std::size_t dim() const noexcept { return diag_.size(); }
    [[nodiscard]] const SlaterBasis& basis() const noexcept { return basis_; }
    [[nodiscard]] const Vector& diagonal() const noexcept { return diag_; }
    [[nodiscard]] std::size_t stored_offdiagonal() const noexcept { return vals_.size(); }

    [[nodiscard]] const ManyBodyContext* context() const noexcept { return context_.get(); }
    void set_context(std::shared_ptr<const ManyBodyContext> ctx) { context_ = std::move(ctx); }

    /// H(i, j); binary search in the stored row.
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        if (i == j) return diag_[i];
        if (i < j) std::swap(i, j);
        const auto b = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        const auto e = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
        return it != e && *it == j ? vals_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
    }

    /// y = H x.
    void apply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = dim();
        require(x.size() == n && y.size() == n, "ManyBodyOperator::apply: size mismatch");
        for (std::size_t i = 0; i < n; ++i) y[i] = diag_[i] * x[i];
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            const double xi = x[i];
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                const std::size_t j = cols_[k];
                s += vals_[k] * x[j];
                y[j] += vals_[k] * xi;
            }
            y[i] += s;
        }
    }

    [[nodiscard]] Vector apply(std::span<const double> x) const {
        Vector y(dim());
        apply(x, y);
        return y;
    }

    /// Max absolute row sum.
    [[nodiscard]] double norm1() const {
        Vector s(dim(), 0.0);
        for (std::size_t i = 0; i < dim(); ++i) {
            s[i] += std::abs(diag_[i]);
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                s[i] += std::abs(vals_[k]);
                s[cols_[k]] += std::abs(vals_[k]);
            }
        }
        return s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
    }

    /// Dense symmetric copy; only available up to dense_cap determinants.
    [[nodiscard]] SymMatrix dense() const {
        require(dim() <= dense_cap, "dense many-body matrix requested above the dense cap");
        SymMatrix out = SymMatrix::dense(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            out.set(i, i, diag_[i]);
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out.set(i, cols_[k], vals_[k]);
        }
        return out;
    }

    [[nodiscard]] Matrix to_matrix() const {
        require(dim() <= dense_cap, "dense many-body matrix requested above the dense cap");
        Matrix out(dim(), dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            out(i, i) = diag_[i];
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                out(i, cols_[k]) = vals_[k];
                out(cols_[k], i) = vals_[k];
            }
        }
        return out;
    }

    [[nodiscard]] double rayleigh_quotient(std::span<const double> x) const {
        const Vector y = apply(x);
        return dot(x, y) / dot(x, x);
    }

private:
    SlaterBasis basis_;
    Vector diag_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    Vector vals_;
    std::shared_ptr<const ManyBodyContext> context_;
};

namespace detail {

/// Builds the operator from a row generator: gen(i, emit) calls emit(j, value)
/// for columns j < i; the diagonal comes from diag(i).
template <class Diag, class Gen>
ManyBodyOperator build_operator(const SlaterBasis& basis, Diag&& diag, Gen&& gen) {
    const std::size_t n = basis.size();
    Vector d(n);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
    parallel_for(n, [&](std::size_t i) {
        d[i] = diag(i);
        auto& row = rows[i];
        gen(i, [&](std::size_t j, double v) {
            if (v != 0.0) row.emplace_back(static_cast<std::uint32_t>(j), v);
        });
        std::sort(row.begin(), row.end());
    });
    std::vector<std::size_t> ptr(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) ptr[i + 1] = ptr[i] + rows[i].size();
    std::vector<std::uint32_t> cols(ptr[n]);
    Vector vals(ptr[n]);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = ptr[i];
        for (const auto& [j, v] : rows[i]) {
            cols[k] = j;
            vals[k] = v;
            ++k;
        }
        std::vector<std::pair<std::uint32_t, double>>().swap(rows[i]);
    }
    return ManyBodyOperator(basis, std::move(d), std::move(ptr), std::move(cols), std::move(vals));
}

}  // namespace detail

/// Slater–Condon assembly of Σ_i h(i) + Σ_{i≠j} w(i, j) over determinants.
///
/// Interactions enter with the pair-density normalization N(N-1), so the pair
/// operator is g = 2w summed over unordered pairs.
inline ManyBodyOperator assemble_manybody(const SymMatrix& one_body, const TwoBodyTensor& two_body,
                                          const SlaterBasis& basis) {
    const std::size_t n_orb = basis.n_orbitals();
    require(one_body.dim() == n_orb, "assemble_manybody: one-body size does not match the orbital count");
    const bool has_w = !two_body.empty() && two_body.max_abs() != 0.0;
    if (!two_body.empty()) require(two_body.n_orbitals() == n_orb, "assemble_manybody: two-body orbital count mismatch");
    const std::size_t np = basis.n_particles();
    Matrix h(n_orb, n_orb);
    for (std::size_t i = 0; i < n_orb; ++i)
        for (std::size_t j = 0; j < n_orb; ++j) h(i, j) = one_body(i, j);
    // antisymmetrized pair element ⟨pq||rs⟩ with g = 2w
    auto g_anti = [&](std::size_t p, std::size_t q, std::size_t r, std::size_t s) {
        return 2.0 * (two_body(p, q, r, s) - two_body(p, q, s, r));
    };

    auto diag = [&](std::size_t i) {
        const auto occ = basis.tuple(i);
        double e = 0.0;
        for (std::size_t x = 0; x < np; ++x) {
            e += h(occ[x], occ[x]);
            if (has_w)
                for (std::size_t y = x + 1; y < np; ++y) e += g_anti(occ[x], occ[y], occ[x], occ[y]);
        }
        return e;
    };

    auto gen = [&](std::size_t i, auto&& emit) {
        const auto occ_span = basis.tuple(i);
        const std::vector<std::uint32_t> occ(occ_span.begin(), occ_span.end());
        std::vector<char> occupied(n_orb, 0);
        for (auto o : occ) occupied[o] = 1;
        std::vector<std::uint32_t> work;
        // single excitations a -> p
        for (std::uint32_t a : occ)
            for (std::uint32_t p = 0; p < n_orb; ++p) {
                if (occupied[p]) continue;
                work = occ;
                int sign = detail::annihilate(work, a);
                sign *= detail::create(work, p);
                const std::size_t j = basis.rank(work);
                if (j >= i) continue;
                double v = h(p, a);
                if (has_w)
                    for (std::uint32_t b : occ)
                        if (b != a) v += g_anti(p, b, a, b);
                emit(j, sign * v);
            }
        if (!has_w) return;
        // double excitations (a, b) -> (p, q)
        for (std::size_t x = 0; x < np; ++x)
            for (std::size_t y = x + 1; y < np; ++y) {
                const std::uint32_t a = occ[x], b = occ[y];
                for (std::uint32_t p = 0; p < n_orb; ++p) {
                    if (occupied[p]) continue;
                    for (std::uint32_t q = p + 1; q < n_orb; ++q) {
                        if (occupied[q]) continue;
                        work = occ;
                        int sign = detail::annihilate(work, a);
                        sign *= detail::annihilate(work, b);
                        sign *= detail::create(work, q);
                        sign *= detail::create(work, p);
                        const std::size_t j = basis.rank(work);
                        if (j >= i) continue;
                        emit(j, sign * g_anti(p, q, a, b));
                    }
                }
            }
    };
    return detail::build_operator(basis, diag, gen);
}

/// Full pipeline: orbitals, transforms, Slater–Condon assembly, with context attached.
inline ManyBodyOperator assemble_manybody(const OrbitalSet& orbitals, const PotentialSpec& v, const InteractionSpec& w,
                                          std::size_t n_particles, std::size_t cap = 100000) {
    const GridBasis& grid = orbitals.grid;
    const SymMatrix a = add_symmetric(assemble_stiffness(grid), assemble_potential(grid, v));
    const SymMatrix one = transform_one_body(a, orbitals.coefficients);
    const TwoBodyTensor two = transform_two_body(w, grid, orbitals.coefficients);
    ManyBodyOperator op = assemble_manybody(one, two, SlaterBasis(orbitals.size(), n_particles, cap));
    op.set_context(std::make_shared<const ManyBodyContext>(ManyBodyContext{orbitals, v, w}));
    return op;
}

// ---------------------------------------------------------------------------
// Brute-force oracle (N = 2)
// ---------------------------------------------------------------------------

namespace detail {

/// Five-point Gauss–Legendre rule on [0, 1].
inline constexpr std::array<double, 5> gl5_nodes{0.046910077030668, 0.2307653449471585, 0.5, 0.7692346550528415,
                                                  0.953089922969332};
inline constexpr std::array<double, 5> gl5_weights{0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                                    0.23931433524968324, 0.11846344252809454};

/// Values and derivatives of every dof at x, computed from the dof descriptors.
inline void dof_values(const GridBasis& grid, double x, std::size_t cell, Vector& val, Vector& der) {
    const double n = static_cast<double>(grid.n_cells());
    val.assign(grid.dim(), 0.0);
    der.assign(grid.dim(), 0.0);
    for (std::size_t d = 0; d < grid.dim(); ++d)
        for (const auto& [node, weight] : grid.dofs()[d].support) {
            if (node != cell && node != cell + 1) continue;
            const double t = x * n - static_cast<double>(node);
            val[d] += weight * (1.0 - std::abs(t));
            der[d] += weight * (node == cell ? -n : n);
        }
}

}  // namespace detail

/// Dense two-particle Galerkin matrix on the tensor-product space followed by
/// projection onto antisymmetrized products of Cholesky orbitals. Every
/// integral is done by 5-point Gauss–Legendre per cell (exact for these
/// polynomial degrees), independent of the Slater–Condon path.
inline ManyBodyOperator assemble_manybody_bruteforce(const PotentialSpec& v, const InteractionSpec& w,
                                                     const GridBasis& grid, std::size_t n_particles = 2) {
    require(n_particles == 2, "brute-force assembly supports N = 2 only");
    const std::size_t n = grid.dim();
    require(n <= 12, "brute-force assembly supports at most 12 orbitals");
    validate_interaction(w, grid.node_count());
    const std::size_t cells = grid.n_cells();
    const double h = grid.h();

    // quadrature points with dof values and derivatives
    struct QPoint {
        double x, weight;
        std::size_t cell;
        double t;
        Vector val, der;
    };
    std::vector<QPoint> qp;
    for (std::size_t c = 0; c < cells; ++c)
        for (std::size_t q = 0; q < 5; ++q) {
            QPoint p{(static_cast<double>(c) + detail::gl5_nodes[q]) * h, detail::gl5_weights[q] * h, c,
                     detail::gl5_nodes[q], {}, {}};
            detail::dof_values(grid, p.x, c, p.val, p.der);
            qp.push_back(std::move(p));
        }

    Matrix mm(n, n), kk(n, n), pp(n, n);
    for (const auto& p : qp)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                mm(i, k) += p.weight * p.val[i] * p.val[k];
                kk(i, k) += p.weight * p.der[i] * p.der[k];
            }
    std::visit(
        [&](const auto& pot) {
            using T = std::decay_t<decltype(pot)>;
            if constexpr (std::is_same_v<T, DeltaPotential>) {
                require(pot.x0 >= 0.0 && pot.x0 <= 1.0, "delta position must lie in [0, 1]");
                std::size_t c = std::min(cells - 1, static_cast<std::size_t>(std::floor(pot.x0 / h)));
                Vector val, der;
                detail::dof_values(grid, pot.x0, c, val, der);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t k = 0; k < n; ++k) pp(i, k) += pot.strength * val[i] * val[k];
            } else if constexpr (std::is_same_v<T, SampledPotential>) {
                require(pot.values.size() == grid.node_count(), "sampled potential needs one value per node");
                for (const auto& p : qp) {
                    const double vx = (1.0 - p.t) * pot.values[p.cell] + p.t * pot.values[p.cell + 1];
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t k = 0; k < n; ++k) pp(i, k) += p.weight * vx * p.val[i] * p.val[k];
                }
            } else if constexpr (std::is_same_v<T, HMinusOnePotential>) {
                require(pot.cell_values.size() == cells, "H^-1 potential needs one V value per cell");
                for (const auto& p : qp)
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t k = 0; k < n; ++k)
                            pp(i, k) += p.weight * (pot.alpha * p.val[i] * p.val[k] +
                                                    pot.cell_values[p.cell] *
                                                        (p.der[i] * p.val[k] + p.val[i] * p.der[k]));
            }
        },
        v);

    // two-particle operator on pair index (i, j) -> i * n + j
    const std::size_t n2 = n * n;
    Matrix h2(n2, n2);
    const Matrix ka = [&] {
        Matrix s(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) s(i, k) = kk(i, k) + pp(i, k);
        return s;
    }();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l)
                    h2(i * n + j, k * n + l) = ka(i, k) * mm(j, l) + mm(i, k) * ka(j, l);

    if (const auto* dc = std::get_if<DeltaContact>(&w)) {
        for (const auto& p : qp)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t k = 0; k < n; ++k)
                        for (std::size_t l = 0; l < n; ++l)
                            h2(i * n + j, k * n + l) +=
                                2.0 * dc->g * p.weight * p.val[i] * p.val[j] * p.val[k] * p.val[l];
    } else if (const auto* sk = std::get_if<SampledKernel>(&w)) {
        for (const auto& px : qp)
            for (const auto& py : qp) {
                const auto& kv = sk->values;
                const double wxy =
                    (1 - px.t) * ((1 - py.t) * kv(px.cell, py.cell) + py.t * kv(px.cell, py.cell + 1)) +
                    px.t * ((1 - py.t) * kv(px.cell + 1, py.cell) + py.t * kv(px.cell + 1, py.cell + 1));
                const double s = 2.0 * px.weight * py.weight * wxy;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t k = 0; k < n; ++k) {
                        const double xi = s * px.val[i] * px.val[k];
                        if (xi == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j)
                            for (std::size_t l = 0; l < n; ++l)
                                h2(i * n + j, k * n + l) += xi * py.val[j] * py.val[l];
                    }
            }
    }

    // orthonormal orbitals from the quadrature mass matrix
    SymMatrix mq = SymMatrix::dense(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k <= i; ++k) mq.set(i, k, 0.5 * (mm(i, k) + mm(k, i)));
    const Matrix r = orthonormalize_orbitals(mq);

    const SlaterBasis basis(n, 2);
    const std::size_t dim = basis.size();
    Matrix cvec(n2, dim);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t jdx = 0; jdx < dim; ++jdx) {
        const auto t = basis.tuple(jdx);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                cvec(i * n + j, jdx) = inv_sqrt2 * (r(i, t[0]) * r(j, t[1]) - r(i, t[1]) * r(j, t[0]));
    }
    const Matrix hc = matmul(h2, cvec);
    const Matrix hp = matmul_tn(cvec, hc);

    auto diag = [&](std::size_t i) { return hp(i, i); };
    auto gen = [&](std::size_t i, auto&& emit) {
        for (std::size_t j = 0; j < i; ++j) emit(j, 0.5 * (hp(i, j) + hp(j, i)));
    };
    ManyBodyOperator op = detail::build_operator(basis, diag, gen);
    op.set_context(std::make_shared<const ManyBodyContext>(ManyBodyContext{OrbitalSet{grid, r, {}}, v, w}));
    return op;
}

}  // namespace fermigate
