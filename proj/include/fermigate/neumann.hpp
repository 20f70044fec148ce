#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/manybody.hpp"
#include "fermigate/wavefunction.hpp"

namespace fermigate {

/// The face {x_coordinate = 0} or {x_coordinate = 1} of the cube.
struct Face {
    std::size_t coordinate = 0;
    bool at_one = false;
};

/// Cross-section profile of the extension F(x) = β(x_k) f(x′).
enum class Extension { OneCell, TwoCell };

namespace detail {

/// β at each node: 1 on the face, then 0 (one cell) or ½, 0 (two cells).
inline Vector extension_profile(std::size_t m, bool at_one, Extension ext) {
    Vector b(m, 0.0);
    const std::size_t first = at_one ? m - 1 : 0;
    const std::size_t second = at_one ? m - 2 : 1;
    b[first] = 1.0;
    if (ext == Extension::TwoCell) b[second] = 0.5;
    return b;
}

/// Dense full-hat-set matrices of the grid with n cells.
struct FreeMatrices {
    Matrix a;  // K + P
    Matrix m;
};

inline FreeMatrices free_matrices(std::size_t n_cells, const PotentialSpec& v) {
    const GridBasis g(n_cells, BoundarySpec::free());
    const SymMatrix a = add_symmetric(assemble_stiffness(g), assemble_potential(g, v));
    return {a.to_dense(), assemble_overlap(g).to_dense()};
}

/// Nodal tensor of β(x_k) f(x′), with f given on the remaining N-1 axes in order.
inline NodalTensor product_extension(std::size_t n_particles, std::size_t m, const Face& face,
                                     std::span<const double> f, Extension ext) {
    std::size_t rest = 1;
    for (std::size_t k = 1; k < n_particles; ++k) rest *= m;
    require(f.size() == rest, "face profile has the wrong number of nodal values");
    const Vector beta = extension_profile(m, face.at_one, ext);
    NodalTensor out(n_particles, m);
    std::vector<std::size_t> idx(n_particles);
    for (std::size_t fl = 0; fl < out.size(); ++fl) {
        out.unflat(fl, idx);
        std::size_t r = 0;
        for (std::size_t k = 0; k < n_particles; ++k)
            if (k != face.coordinate) r = r * m + idx[k];
        out.data()[fl] = beta[idx[face.coordinate]] * f[r];
    }
    return out;
}

}  // namespace detail

/// Weak Neumann trace a(Ψ, F) − λ⟨Ψ, F⟩ for the extension F = β ⊗ f of a face
/// profile f. Because the form is permutation invariant and Ψ antisymmetric,
/// pairing with F equals pairing with its antisymmetric projection.
///
/// Interactions are supported for N = 2 only.
inline double neumann_trace_weak(const NodalTensor& psi, double lambda, const PotentialSpec& v,
                                 const InteractionSpec& w, std::span<const double> f, const Face& face,
                                 Extension ext = Extension::OneCell) {
    const std::size_t np = psi.n_particles();
    const std::size_t m = psi.nodes_per_axis();
    require(face.coordinate < np, "face coordinate out of range");
    const detail::FreeMatrices mats = detail::free_matrices(m - 1, v);
    const NodalTensor fx = detail::product_extension(np, m, face, f, ext);

    // G = Σ_j (A_j ⊗ M_rest) F − λ M^{⊗N} F
    std::vector<double> total(fx.size(), 0.0);
    for (std::size_t j = 0; j <= np; ++j) {
        std::vector<std::size_t> shape(np, m);
        std::vector<double> t = fx.data();
        for (std::size_t k = 0; k < np; ++k) t = detail::mode_product(t, shape, k, (k == j) ? mats.a : mats.m);
        const double c = j < np ? 1.0 : -lambda;  // j == np: the overlap term
        axpy(c, t, total);
    }
    double s = dot(psi.data(), total);

    if (!is_zero_interaction(w)) {
        require(np == 2, "weak Neumann trace with interaction supports N = 2 only");
        const double h = psi.h();
        const std::array<double, 3> gx{0.1127016653792583, 0.5, 0.8872983346207417};
        const std::array<double, 3> gw{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
        auto bil = [&](const std::vector<double>& d, std::size_t i, std::size_t j, double t, double u) {
            return (1 - t) * ((1 - u) * d[i * m + j] + u * d[i * m + j + 1]) +
                   t * ((1 - u) * d[(i + 1) * m + j] + u * d[(i + 1) * m + j + 1]);
        };
        if (const auto* dc = std::get_if<DeltaContact>(&w)) {
            for (std::size_t c = 0; c + 1 < m; ++c)
                for (std::size_t q = 0; q < 3; ++q)
                    s += 2.0 * dc->g * h * gw[q] * bil(psi.data(), c, c, gx[q], gx[q]) *
                         bil(fx.data(), c, c, gx[q], gx[q]);
        } else {
            const auto& kv = std::get<SampledKernel>(w).values;
            for (std::size_t ci = 0; ci + 1 < m; ++ci)
                for (std::size_t cj = 0; cj + 1 < m; ++cj)
                    for (std::size_t p = 0; p < 3; ++p)
                        for (std::size_t q = 0; q < 3; ++q) {
                            const double t = gx[p], u = gx[q];
                            const double wk = (1 - t) * ((1 - u) * kv(ci, cj) + u * kv(ci, cj + 1)) +
                                              t * ((1 - u) * kv(ci + 1, cj) + u * kv(ci + 1, cj + 1));
                            s += 2.0 * h * h * gw[p] * gw[q] * wk * bil(psi.data(), ci, cj, t, u) *
                                 bil(fx.data(), ci, cj, t, u);
                        }
        }
    }
    return s;
}

struct NeumannLimit {
    double estimate = 0.0;       // intercept of the linear fit at ε = 0
    double slope = 0.0;
    double fit_residual = 0.0;   // ‖q − (a + bε)‖₂
    std::vector<double> eps;
    std::vector<double> values;  // −⟨γ_εΨ, f⟩ / ε
};

/// −⟨γ_εΨ, f⟩/ε on node-aligned ε = mult · h, extrapolated linearly to ε = 0.
inline NeumannLimit neumann_trace_limit(const NodalTensor& psi, std::span<const double> f, const Face& face,
                                        std::span<const std::size_t> eps_multiples = std::array<std::size_t, 4>{8, 4,
                                                                                                               2, 1}) {
    const std::size_t np = psi.n_particles();
    const std::size_t m = psi.nodes_per_axis();
    require(face.coordinate < np, "face coordinate out of range");
    require(eps_multiples.size() >= 2, "at least two ε values are needed");
    std::size_t rest = 1;
    for (std::size_t k = 1; k < np; ++k) rest *= m;
    require(f.size() == rest, "face profile has the wrong number of nodal values");

    // M^{⊗(N-1)} f for the L² pairing over the face coordinates
    std::vector<double> mf(f.begin(), f.end());
    if (np > 1) {
        const Matrix mm = detail::free_matrices(m - 1, NoPotential{}).m;
        std::vector<std::size_t> shape(np - 1, m);
        for (std::size_t k = 0; k + 1 < np; ++k) mf = detail::mode_product(mf, shape, k, mm);
    }
    auto slice = [&](std::size_t node) {
        std::vector<double> out(rest);
        std::vector<std::size_t> idx(np);
        for (std::size_t r = 0; r < rest; ++r) {
            std::size_t x = r;
            for (std::size_t k = np; k-- > 0;) {
                if (k == face.coordinate) continue;
                idx[k] = x % m;
                x /= m;
            }
            idx[face.coordinate] = node;
            out[r] = psi.at(idx);
        }
        return out;
    };
    const std::vector<double> face_vals = slice(face.at_one ? m - 1 : 0);
    require(max_abs(face_vals) <= 1e-10, "Dirichlet trace of psi does not vanish on the face");

    NeumannLimit out;
    const double h = psi.h();
    for (std::size_t mult : eps_multiples) {
        require(mult >= 1 && mult < m, "ε multiple out of range");
        const std::vector<double> s = slice(face.at_one ? m - 1 - mult : mult);
        const double eps = static_cast<double>(mult) * h;
        out.eps.push_back(eps);
        out.values.push_back(-dot(s, mf) / eps);
    }
    // least-squares line q = a + b ε
    const double n = static_cast<double>(out.eps.size());
    double se = 0, sq = 0, see = 0, seq = 0;
    for (std::size_t i = 0; i < out.eps.size(); ++i) {
        se += out.eps[i];
        sq += out.values[i];
        see += out.eps[i] * out.eps[i];
        seq += out.eps[i] * out.values[i];
    }
    out.slope = (n * seq - se * sq) / (n * see - se * se);
    out.estimate = (sq - out.slope * se) / n;
    double r2 = 0.0;
    for (std::size_t i = 0; i < out.eps.size(); ++i) {
        const double d = out.values[i] - (out.estimate + out.slope * out.eps[i]);
        r2 += d * d;
    }
    out.fit_residual = std::sqrt(r2);
    return out;
}

/// Nodal values of g on the remaining N-1 axes: f(x′) = Π_k g(x′_k).
template <class G>
std::vector<double> product_face_profile(std::size_t n_particles, std::size_t m, G&& g) {
    std::size_t rest = 1;
    for (std::size_t k = 1; k < n_particles; ++k) rest *= m;
    std::vector<double> f(rest, 1.0);
    const double h = 1.0 / static_cast<double>(m - 1);
    for (std::size_t r = 0; r < rest; ++r) {
        std::size_t x = r;
        for (std::size_t k = 1; k < n_particles; ++k) {
            f[r] *= g(static_cast<double>(x % m) * h);
            x /= m;
        }
    }
    return f;
}

}  // namespace fermigate
