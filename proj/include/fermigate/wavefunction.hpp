#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/manybody.hpp"
#include "fermigate/slater_basis.hpp"

namespace fermigate {

/// Values of an N-particle function at the nodes of the uniform grid in each
/// coordinate, i.e. its coefficients in the full tensor-product P1 basis.
class NodalTensor {
public:
    NodalTensor() = default;
    NodalTensor(std::size_t n_particles, std::size_t nodes_per_axis)
        : n_(n_particles), m_(nodes_per_axis), data_(checked_size(n_particles, nodes_per_axis), 0.0) {}

    [[nodiscard]] std::size_t n_particles() const noexcept { return n_; }
    [[nodiscard]] std::size_t nodes_per_axis() const noexcept { return m_; }
    [[nodiscard]] std::size_t n_cells() const noexcept { return m_ - 1; }
    [[nodiscard]] double h() const noexcept { return 1.0 / static_cast<double>(m_ - 1); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::vector<double>& data() noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    [[nodiscard]] std::size_t flat(std::span<const std::size_t> idx) const noexcept {
        std::size_t f = 0;
        for (std::size_t k = 0; k < n_; ++k) f = f * m_ + idx[k];
        return f;
    }
    void unflat(std::size_t f, std::span<std::size_t> idx) const noexcept {
        for (std::size_t k = n_; k-- > 0;) {
            idx[k] = f % m_;
            f /= m_;
        }
    }
    [[nodiscard]] double at(std::span<const std::size_t> idx) const noexcept { return data_[flat(idx)]; }
    double& at(std::span<const std::size_t> idx) noexcept { return data_[flat(idx)]; }

private:
    static std::size_t checked_size(std::size_t n, std::size_t m) {
        require(n >= 1 && m >= 2, "NodalTensor: invalid shape");
        double s = 1.0;
        for (std::size_t k = 0; k < n; ++k) s *= static_cast<double>(m);
        require(s <= 5e7, "NodalTensor: too many nodes");
        return static_cast<std::size_t>(s);
    }

    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<double> data_;
};

namespace detail {

/// Mode-k product of a tensor with shape `shape` and a matrix (rows x shape[k]).
inline std::vector<double> mode_product(const std::vector<double>& t, std::vector<std::size_t>& shape, std::size_t k,
                                        const Matrix& a) {
    require(a.cols() == shape[k], "mode_product: size mismatch");
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < k; ++i) outer *= shape[i];
    for (std::size_t i = k + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::size_t din = shape[k], dout = a.rows();
    std::vector<double> out(outer * dout * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < dout; ++r) {
            double* dst = out.data() + (o * dout + r) * inner;
            for (std::size_t c = 0; c < din; ++c) {
                const double arc = a(r, c);
                if (arc == 0.0) continue;
                const double* src = t.data() + (o * din + c) * inner;
                for (std::size_t x = 0; x < inner; ++x) dst[x] += arc * src[x];
            }
        }
    shape[k] = dout;
    return out;
}

/// Parity of a permutation given as an index array.
inline int permutation_sign(std::span<const std::size_t> p) {
    int s = 1;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            if (p[i] > p[j]) s = -s;
    return s;
}

inline double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f;
}

}  // namespace detail

/// Full antisymmetric coefficient tensor over orbital indices:
/// A[σ(J)] = sgn(σ) c_J / √N!.
inline std::vector<double> antisymmetric_coefficients(std::span<const double> psi, const SlaterBasis& basis) {
    require(psi.size() == basis.size(), "coefficient vector does not match the Slater basis");
    const std::size_t n = basis.n_orbitals();
    const std::size_t np = basis.n_particles();
    std::size_t total = 1;
    for (std::size_t k = 0; k < np; ++k) total *= n;
    std::vector<double> a(total, 0.0);
    std::vector<std::size_t> perm(np);
    const double norm = 1.0 / std::sqrt(detail::factorial(np));
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if (psi[j] == 0.0) continue;
        const auto t = basis.tuple(j);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        do {
            std::size_t f = 0;
            for (std::size_t k = 0; k < np; ++k) f = f * n + t[perm[k]];
            a[f] = detail::permutation_sign(perm) * psi[j] * norm;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return a;
}

/// Nodal tensor of the many-body function with Slater coefficients `psi`.
inline NodalTensor to_nodal_tensor(std::span<const double> psi, const SlaterBasis& basis, const OrbitalSet& orbitals) {
    require(orbitals.size() == basis.n_orbitals(), "orbital count does not match the Slater basis");
    const Matrix phi = orbitals.nodal_values();
    std::vector<std::size_t> shape(basis.n_particles(), basis.n_orbitals());
    std::vector<double> t = antisymmetric_coefficients(psi, basis);
    for (std::size_t k = 0; k < basis.n_particles(); ++k) t = detail::mode_product(t, shape, k, phi);
    NodalTensor out(basis.n_particles(), orbitals.grid.node_count());
    out.data() = std::move(t);
    return out;
}

inline NodalTensor to_nodal_tensor(std::span<const double> psi, const ManyBodyOperator& op) {
    require(op.context() != nullptr, "operator carries no orbital context");
    return to_nodal_tensor(psi, op.basis(), op.context()->orbitals);
}

/// Ψ(x) for a point x ∈ [0,1]^N: Σ_J c_J det[φ_{j_a}(x_b)] / √N!.
inline double evaluate_wavefunction(std::span<const double> psi, const SlaterBasis& basis, const OrbitalSet& orbitals,
                                    std::span<const double> x) {
    const std::size_t np = basis.n_particles();
    require(x.size() == np, "point dimension must equal the particle count");
    const std::size_t n = basis.n_orbitals();
    // orbital values at each coordinate
    Matrix val(np, n);
    for (std::size_t b = 0; b < np; ++b)
        for (const auto& [dof, w] : orbitals.grid.evaluate(x[b]))
            for (std::size_t a = 0; a < n; ++a) val(b, a) += w * orbitals.coefficients(dof, a);
    double s = 0.0;
    Matrix m(np, np);
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if (psi[j] == 0.0) continue;
        const auto t = basis.tuple(j);
        for (std::size_t r = 0; r < np; ++r)
            for (std::size_t c = 0; c < np; ++c) m(r, c) = val(c, t[r]);
        // determinant by Gaussian elimination with partial pivoting
        double det = 1.0;
        for (std::size_t c = 0; c < np; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < np; ++r)
                if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
            if (m(piv, c) == 0.0) {
                det = 0.0;
                break;
            }
            if (piv != c) {
                for (std::size_t k = 0; k < np; ++k) std::swap(m(c, k), m(piv, k));
                det = -det;
            }
            det *= m(c, c);
            for (std::size_t r = c + 1; r < np; ++r) {
                const double f = m(r, c) / m(c, c);
                for (std::size_t k = c; k < np; ++k) m(r, k) -= f * m(c, k);
            }
        }
        s += psi[j] * det;
    }
    return s / std::sqrt(detail::factorial(np));
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// Trapezoid weights of the uniform grid: ∫ φ_i for the full hat set.
inline Vector trapezoid_weights(std::size_t n_cells) {
    const double h = 1.0 / static_cast<double>(n_cells);
    Vector w(n_cells + 1, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

/// ρ at the grid nodes as the lumped projection ⟨ρ, φ_i⟩ / ⟨1, φ_i⟩, with ρ
/// built from the one-particle reduced density matrix. The trapezoid sum of the
/// returned values is exactly ∫ ρ.
inline Vector reduced_density(std::span<const double> psi, const SlaterBasis& basis, const OrbitalSet& orbitals) {
    const std::size_t n = basis.n_orbitals();
    const std::size_t np = basis.n_particles();
    const std::vector<double> a = antisymmetric_coefficients(psi, basis);
    const std::size_t rest = a.size() / n;
    Matrix gamma(n, n);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q <= p; ++q) {
            const double s = static_cast<double>(np) * dot(std::span<const double>(a.data() + p * rest, rest),
                                                           std::span<const double>(a.data() + q * rest, rest));
            gamma(p, q) = s;
            gamma(q, p) = s;
        }
    const Matrix phi = orbitals.nodal_values();
    const Matrix pg = matmul(phi, gamma);
    const std::size_t m = phi.rows();
    auto d = [&](std::size_t i, std::size_t j) { return dot(pg.row(i), phi.row(j)); };
    const double h = orbitals.grid.h();
    Vector proj(m, 0.0);
    for (std::size_t e = 0; e + 1 < m; ++e) {
        const double s00 = d(e, e), s01 = d(e, e + 1), s11 = d(e + 1, e + 1);
        proj[e] += h * (s00 / 4.0 + s01 / 6.0 + s11 / 12.0);
        proj[e + 1] += h * (s00 / 12.0 + s01 / 6.0 + s11 / 4.0);
    }
    const Vector w = trapezoid_weights(m - 1);
    for (std::size_t i = 0; i < m; ++i) proj[i] /= w[i];
    return proj;
}

namespace detail {

/// ∫ φ_i φ_k φ_l over the full hat set; zero unless k, l ∈ {i-1, i, i+1} and |k-l| ≤ 1.
inline double triple_hat(std::size_t i, std::size_t k, std::size_t l, std::size_t m, double h) {
    if (k == i && l == i) return (i == 0 || i + 1 == m) ? h / 4.0 : h / 2.0;
    const auto dk = static_cast<long>(k) - static_cast<long>(i);
    const auto dl = static_cast<long>(l) - static_cast<long>(i);
    if (std::abs(dk) > 1 || std::abs(dl) > 1 || std::abs(dk - dl) > 1) return 0.0;
    return h / 12.0;
}

/// Applies the 1D P1 mass matrix (full hat set) along axis k of a nodal tensor.
inline std::vector<double> apply_mass_axis(const std::vector<double>& t, std::size_t n_axes, std::size_t m,
                                           std::size_t k) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < k; ++i) outer *= m;
    for (std::size_t i = k + 1; i < n_axes; ++i) inner *= m;
    const double h = 1.0 / static_cast<double>(m - 1);
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < m; ++r) {
            double* dst = out.data() + (o * m + r) * inner;
            const double diag = (r == 0 || r + 1 == m) ? h / 3.0 : 2.0 * h / 3.0;
            for (std::size_t c = (r == 0 ? 0 : r - 1); c <= std::min(m - 1, r + 1); ++c) {
                const double coef = c == r ? diag : h / 6.0;
                const double* src = t.data() + (o * m + c) * inner;
                for (std::size_t x = 0; x < inner; ++x) dst[x] += coef * src[x];
            }
        }
    return out;
}

}  // namespace detail

/// ρ computed directly from a nodal tensor (same lumped projection).
inline Vector reduced_density(const NodalTensor& psi) {
    const std::size_t np = psi.n_particles();
    const std::size_t m = psi.nodes_per_axis();
    const double h = psi.h();
    std::vector<double> u = psi.data();
    for (std::size_t k = 1; k < np; ++k) u = detail::apply_mass_axis(u, np, m, k);
    const std::size_t rest = psi.size() / m;
    const auto& t = psi.data();
    Vector proj(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t k = (i == 0 ? 0 : i - 1); k <= std::min(m - 1, i + 1); ++k)
            for (std::size_t l = (i == 0 ? 0 : i - 1); l <= std::min(m - 1, i + 1); ++l) {
                const double tri = detail::triple_hat(i, k, l, m, h);
                if (tri == 0.0) continue;
                s += tri * dot(std::span<const double>(t.data() + k * rest, rest),
                               std::span<const double>(u.data() + l * rest, rest));
            }
        proj[i] = static_cast<double>(np) * s;
    }
    const Vector w = trapezoid_weights(m - 1);
    for (std::size_t i = 0; i < m; ++i) proj[i] /= w[i];
    return proj;
}

/// ρ₂ on the node grid (m x m), lumped: ⟨ρ₂, φ_i ⊗ φ_j⟩ / (⟨1,φ_i⟩⟨1,φ_j⟩).
inline Matrix reduced_pair_density(const NodalTensor& psi) {
    const std::size_t np = psi.n_particles();
    require(np >= 2, "pair density needs at least two particles");
    const std::size_t m = psi.nodes_per_axis();
    const double h = psi.h();
    std::vector<double> u = psi.data();
    for (std::size_t k = 2; k < np; ++k) u = detail::apply_mass_axis(u, np, m, k);
    const std::size_t rest = psi.size() / (m * m);
    const auto& t = psi.data();
    auto slab = [&](const std::vector<double>& v, std::size_t k, std::size_t l) {
        return std::span<const double>(v.data() + (k * m + l) * rest, rest);
    };
    auto nbrs = [&](std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t k = (i == 0 ? 0 : i - 1); k <= std::min(m - 1, i + 1); ++k) out.push_back(k);
        return out;
    };
    const Vector w = trapezoid_weights(m - 1);
    const double pref = static_cast<double>(np) * static_cast<double>(np - 1);
    Matrix out(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto ni = nbrs(i);
        for (std::size_t j = 0; j <= i; ++j) {
            const auto nj = nbrs(j);
            double s = 0.0;
            for (std::size_t k : ni)
                for (std::size_t kp : ni) {
                    const double ti = detail::triple_hat(i, k, kp, m, h);
                    if (ti == 0.0) continue;
                    for (std::size_t l : nj)
                        for (std::size_t lp : nj) {
                            const double tj = detail::triple_hat(j, l, lp, m, h);
                            if (tj == 0.0) continue;
                            s += ti * tj * dot(slab(t, k, l), slab(u, kp, lp));
                        }
                }
            const double v = pref * s / (w[i] * w[j]);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

inline Vector reduced_density(std::span<const double> psi, const ManyBodyOperator& op) {
    require(op.context() != nullptr, "operator carries no orbital context");
    return reduced_density(psi, op.basis(), op.context()->orbitals);
}

inline Matrix reduced_pair_density(std::span<const double> psi, const SlaterBasis& basis, const OrbitalSet& orbitals) {
    require(basis.n_particles() >= 2, "pair density needs at least two particles");
    return reduced_pair_density(to_nodal_tensor(psi, basis, orbitals));
}

/// Trapezoid (tensor) integral of nodal values on the grid.
inline double trapezoid_integral(std::span<const double> values) {
    const Vector w = trapezoid_weights(values.size() - 1);
    return dot(w, values);
}

inline double trapezoid_integral(const Matrix& values) {
    const Vector w = trapezoid_weights(values.rows() - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < values.rows(); ++i)
        for (std::size_t j = 0; j < values.cols(); ++j) s += w[i] * w[j] * values(i, j);
    return s;
}

}  // namespace fermigate
