#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/slater_basis.hpp"
#include "fermigate/wavefunction.hpp"

namespace fermigate {

/// A permutation of {0, ..., N-1} acting on points by
/// σ(x) = (x[image[0]], ..., x[image[N-1]]).
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<std::size_t> image) : image_(std::move(image)) {
        std::vector<char> seen(image_.size(), 0);
        for (std::size_t v : image_) {
            require(v < image_.size() && !seen[v], "Permutation: image is not a bijection");
            seen[v] = 1;
        }
        sign_ = detail::permutation_sign(image_);
    }

    static Permutation identity(std::size_t n) {
        std::vector<std::size_t> im(n);
        std::iota(im.begin(), im.end(), std::size_t{0});
        return Permutation(std::move(im));
    }

    [[nodiscard]] std::size_t size() const noexcept { return image_.size(); }
    [[nodiscard]] int sign() const noexcept { return sign_; }
    [[nodiscard]] const std::vector<std::size_t>& image() const noexcept { return image_; }
    [[nodiscard]] std::size_t operator[](std::size_t i) const noexcept { return image_[i]; }

    [[nodiscard]] Permutation inverse() const {
        std::vector<std::size_t> inv(image_.size());
        for (std::size_t i = 0; i < image_.size(); ++i) inv[image_[i]] = i;
        return Permutation(std::move(inv));
    }

    /// (this ∘ other)(x) = this(other(x)).
    [[nodiscard]] Permutation compose(const Permutation& other) const {
        require(other.size() == size(), "Permutation::compose: size mismatch");
        std::vector<std::size_t> im(size());
        for (std::size_t i = 0; i < size(); ++i) im[i] = other.image_[image_[i]];
        return Permutation(std::move(im));
    }

    template <class T>
    [[nodiscard]] std::vector<T> apply(std::span<const T> x) const {
        std::vector<T> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[image_[i]];
        return y;
    }

    friend bool operator==(const Permutation& a, const Permutation& b) { return a.image_ == b.image_; }

private:
    std::vector<std::size_t> image_;
    int sign_ = 1;
};

/// Every permutation of {0..n-1} in lexicographic order of images.
inline std::vector<Permutation> all_permutations(std::size_t n) {
    std::vector<Permutation> out;
    std::vector<std::size_t> im(n);
    std::iota(im.begin(), im.end(), std::size_t{0});
    do {
        out.emplace_back(im);
    } while (std::next_permutation(im.begin(), im.end()));
    return out;
}

struct CellLocation {
    Permutation sigma;  // sigma(x) is sorted non-decreasingly
    double margin = 0.0;  // smallest consecutive difference of the sorted point; 0 on Γ_int
};

/// Cell of the reflected-simplex tessellation of I_N containing x.
inline CellLocation locate_cell(std::span<const double> x) {
    std::vector<std::size_t> im(x.size());
    std::iota(im.begin(), im.end(), std::size_t{0});
    std::stable_sort(im.begin(), im.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    double margin = x.size() < 2 ? 1.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < im.size(); ++i) margin = std::min(margin, x[im[i]] - x[im[i - 1]]);
    return {Permutation(std::move(im)), margin};
}

// ---------------------------------------------------------------------------
// Data on the ordered simplex
// ---------------------------------------------------------------------------

/// Nodal values on the non-decreasing index tuples 0 ≤ s₁ ≤ ... ≤ s_N ≤ m-1,
/// listed lexicographically. Tuples with ties lie on Γ_int.
class SimplexData {
public:
    SimplexData() = default;
    SimplexData(std::size_t n_particles, std::size_t nodes_per_axis)
        : n_(n_particles),
          m_(nodes_per_axis),
          shifted_(nodes_per_axis + n_particles - 1, n_particles, std::numeric_limits<std::size_t>::max()),
          values_(shifted_.size(), 0.0) {}

    [[nodiscard]] std::size_t n_particles() const noexcept { return n_; }
    [[nodiscard]] std::size_t nodes_per_axis() const noexcept { return m_; }
    [[nodiscard]] double h() const noexcept { return 1.0 / static_cast<double>(m_ - 1); }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::vector<double>& values() noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    /// Node indices of entry r.
    void tuple(std::size_t r, std::span<std::size_t> out) const {
        const auto t = shifted_.tuple(r);
        for (std::size_t k = 0; k < n_; ++k) out[k] = t[k] - k;
    }
    [[nodiscard]] std::size_t rank(std::span<const std::size_t> s) const {
        std::vector<std::uint32_t> t(n_);
        for (std::size_t k = 0; k < n_; ++k) t[k] = static_cast<std::uint32_t>(s[k] + k);
        return shifted_.rank(t);
    }
    [[nodiscard]] static bool tied(std::span<const std::size_t> s) {
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k] == s[k - 1]) return true;
        return false;
    }

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    SlaterBasis shifted_;  // strictly increasing s_k + k
    std::vector<double> values_;
};

/// T ψ = (1/√N!) Σ_σ sgn(σ) ψ∘σ on the full node grid.
inline NodalTensor extend_from_simplex(const SimplexData& s) {
    const std::size_t np = s.n_particles();
    const std::size_t m = s.nodes_per_axis();
    std::vector<std::size_t> idx(np);
    for (std::size_t r = 0; r < s.size(); ++r) {
        s.tuple(r, idx);
        if (SimplexData::tied(idx))
            require(s.values()[r] == 0.0, "simplex data must vanish on tied-index nodes");
    }
    NodalTensor out(np, m);
    const double norm = 1.0 / std::sqrt(detail::factorial(np));
    std::vector<std::size_t> sorted(np), order(np);
    for (std::size_t f = 0; f < out.size(); ++f) {
        out.unflat(f, idx);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
        for (std::size_t k = 0; k < np; ++k) sorted[k] = idx[order[k]];
        if (SimplexData::tied(sorted)) continue;
        out.data()[f] = detail::permutation_sign(order) * norm * s.values()[s.rank(sorted)];
    }
    return out;
}

/// T⁻¹Ψ = √N! Ψ restricted to the non-decreasing node tuples. Tied tuples lie
/// on Γ_int where an antisymmetric Ψ vanishes; they are stored as exact zeros.
inline SimplexData restrict_to_simplex(const NodalTensor& psi) {
    SimplexData s(psi.n_particles(), psi.nodes_per_axis());
    const double f = std::sqrt(detail::factorial(psi.n_particles()));
    std::vector<std::size_t> idx(psi.n_particles());
    for (std::size_t r = 0; r < s.size(); ++r) {
        s.tuple(r, idx);
        s.values()[r] = SimplexData::tied(idx) ? 0.0 : f * psi.at(idx);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Discrete norms (trapezoid / finite-difference), exact under T
// ---------------------------------------------------------------------------

namespace detail {

inline double node_weight(std::size_t i, std::size_t m) {
    const double h = 1.0 / static_cast<double>(m - 1);
    return (i == 0 || i + 1 == m) ? 0.5 * h : h;
}

inline double product_weight(std::span<const std::size_t> idx, std::size_t m, std::size_t skip = SIZE_MAX) {
    double w = 1.0;
    for (std::size_t k = 0; k < idx.size(); ++k)
        if (k != skip) w *= node_weight(idx[k], m);
    return w;
}

}  // namespace detail

/// Σ_nodes W(i) Ψ(i)² with tensor trapezoid weights.
inline double discrete_l2_sq(const NodalTensor& psi) {
    std::vector<std::size_t> idx(psi.n_particles());
    double s = 0.0;
    for (std::size_t f = 0; f < psi.size(); ++f) {
        psi.unflat(f, idx);
        s += detail::product_weight(idx, psi.nodes_per_axis()) * psi.data()[f] * psi.data()[f];
    }
    return s;
}

/// Σ over grid edges of (ΔΨ)²/h times the transverse trapezoid weights.
inline double discrete_h1_semi_sq(const NodalTensor& psi) {
    const std::size_t np = psi.n_particles();
    const std::size_t m = psi.nodes_per_axis();
    const double h = psi.h();
    std::vector<std::size_t> idx(np);
    double s = 0.0;
    for (std::size_t f = 0; f < psi.size(); ++f) {
        psi.unflat(f, idx);
        for (std::size_t k = 0; k < np; ++k) {
            if (idx[k] + 1 >= m) continue;
            ++idx[k];
            const double d = psi.at(idx) - psi.data()[f];
            --idx[k];
            s += detail::product_weight(idx, m, k) * d * d / h;
        }
    }
    return s;
}

inline double discrete_l2_sq(const SimplexData& s) {
    std::vector<std::size_t> idx(s.n_particles());
    double out = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
        s.tuple(r, idx);
        if (SimplexData::tied(idx)) continue;
        out += detail::product_weight(idx, s.nodes_per_axis()) * s.values()[r] * s.values()[r];
    }
    return out;
}

/// Simplex counterpart of discrete_h1_semi_sq: edges (s, s + e_k) that stay
/// non-decreasing and touch at least one strictly increasing tuple.
inline double discrete_h1_semi_sq(const SimplexData& s) {
    const std::size_t np = s.n_particles();
    const std::size_t m = s.nodes_per_axis();
    const double h = s.h();
    std::vector<std::size_t> idx(np);
    double out = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
        s.tuple(r, idx);
        const bool lower_tied = SimplexData::tied(idx);
        for (std::size_t k = 0; k < np; ++k) {
            if (idx[k] + 1 >= m) continue;
            if (k + 1 < np && idx[k] + 1 > idx[k + 1]) continue;
            ++idx[k];
            const bool upper_tied = SimplexData::tied(idx);
            double d = 0.0;
            if (!(lower_tied && upper_tied)) d = s.values()[s.rank(idx)] - s.values()[r];
            --idx[k];
            out += detail::product_weight(idx, m, k) * d * d / h;
        }
    }
    return out;
}

template <class T>
double discrete_h1_sq(const T& x) {
    return discrete_l2_sq(x) + discrete_h1_semi_sq(x);
}

/// Lumped discrete form: H¹ seminorm plus nodal potential Σ_k v(x_k) and pair
/// term Σ_{j≠k} w(x_j, x_k), both weighted by the trapezoid weights.
inline double lumped_form(const NodalTensor& psi, std::span<const double> v_nodes, const Matrix* w_nodes) {
    const std::size_t np = psi.n_particles();
    const std::size_t m = psi.nodes_per_axis();
    std::vector<std::size_t> idx(np);
    double pot = 0.0;
    for (std::size_t f = 0; f < psi.size(); ++f) {
        psi.unflat(f, idx);
        double e = 0.0;
        for (std::size_t k = 0; k < np; ++k) {
            if (!v_nodes.empty()) e += v_nodes[idx[k]];
            if (w_nodes)
                for (std::size_t j = 0; j < np; ++j)
                    if (j != k) e += (*w_nodes)(idx[j], idx[k]);
        }
        pot += detail::product_weight(idx, m) * e * psi.data()[f] * psi.data()[f];
    }
    return discrete_h1_semi_sq(psi) + pot;
}

inline double lumped_form(const SimplexData& s, std::span<const double> v_nodes, const Matrix* w_nodes) {
    const std::size_t np = s.n_particles();
    const std::size_t m = s.nodes_per_axis();
    std::vector<std::size_t> idx(np);
    double pot = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
        s.tuple(r, idx);
        if (SimplexData::tied(idx)) continue;
        double e = 0.0;
        for (std::size_t k = 0; k < np; ++k) {
            if (!v_nodes.empty()) e += v_nodes[idx[k]];
            if (w_nodes)
                for (std::size_t j = 0; j < np; ++j)
                    if (j != k) e += (*w_nodes)(idx[j], idx[k]);
        }
        pot += detail::product_weight(idx, m) * e * s.values()[r] * s.values()[r];
    }
    return discrete_h1_semi_sq(s) + pot;
}

// ---------------------------------------------------------------------------
// Samples, positivity and nodal volume
// ---------------------------------------------------------------------------

enum class RegionTag { Interior, NearGammaInt, NearBoundary };

/// √N!·Ψ at the strictly increasing node tuples, tagged by their distance to
/// Γ_int (consecutive gap / √2) and to the faces x₁ = 0, x_N = 1.
struct SimplexSample {
    std::size_t n_particles = 0;
    std::size_t nodes_per_axis = 0;
    std::vector<std::vector<double>> points;
    std::vector<double> values;
    std::vector<RegionTag> tags;
};

inline RegionTag region_tag(std::span<const std::size_t> s, std::size_t m) {
    for (std::size_t k = 1; k < s.size(); ++k)
        if (s[k] - s[k - 1] < 2) return RegionTag::NearGammaInt;  // distance h/√2 < h
    if (s.front() == 0 || s.back() + 1 == m) return RegionTag::NearBoundary;
    return RegionTag::Interior;
}

inline SimplexSample simplex_sample(const SimplexData& s) {
    SimplexSample out;
    out.n_particles = s.n_particles();
    out.nodes_per_axis = s.nodes_per_axis();
    std::vector<std::size_t> idx(s.n_particles());
    const double h = s.h();
    for (std::size_t r = 0; r < s.size(); ++r) {
        s.tuple(r, idx);
        if (SimplexData::tied(idx)) continue;
        std::vector<double> p(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) p[k] = static_cast<double>(idx[k]) * h;
        out.points.push_back(std::move(p));
        out.values.push_back(s.values()[r]);
        out.tags.push_back(region_tag(idx, s.nodes_per_axis()));
    }
    return out;
}

inline SimplexSample restrict_to_simplex(std::span<const double> psi, const ManyBodyOperator& op) {
    return simplex_sample(restrict_to_simplex(to_nodal_tensor(psi, op)));
}

struct PositivityReport {
    double sign_consistency = 0.0;  // fraction of counted interior nodes with positive sign
    double excluded = 0.0;          // fraction of interior nodes with |value| ≤ ε·max
    std::size_t interior = 0;
    std::size_t counted = 0;
    double max_abs = 0.0;
};

/// Sign fixed by the largest-magnitude node; only Interior-tagged nodes count.
inline PositivityReport positivity_report(const SimplexSample& sample, double eps_pos = 1e-6) {
    PositivityReport r;
    double ref = 0.0;
    for (double v : sample.values)
        if (std::abs(v) > std::abs(ref)) ref = v;
    r.max_abs = std::abs(ref);
    const double sgn = ref < 0.0 ? -1.0 : 1.0;
    std::size_t excluded = 0, positive = 0;
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
        if (sample.tags[i] != RegionTag::Interior) continue;
        ++r.interior;
        const double v = sgn * sample.values[i];
        if (std::abs(v) <= eps_pos * r.max_abs) {
            ++excluded;
            continue;
        }
        ++r.counted;
        if (v > 0.0) ++positive;
    }
    r.excluded = r.interior ? static_cast<double>(excluded) / static_cast<double>(r.interior) : 0.0;
    r.sign_consistency = r.counted ? static_cast<double>(positive) / static_cast<double>(r.counted) : 1.0;
    return r;
}

/// Fraction of interior nodes with |value| ≤ threshold · max, per threshold.
inline std::vector<double> nodal_volume_estimate(const SimplexSample& sample, std::span<const double> thresholds) {
    require(sample.values.size() >= 1000, "nodal volume estimate needs at least 1000 sample points");
    double mx = 0.0;
    for (double v : sample.values) mx = std::max(mx, std::abs(v));
    std::vector<double> out;
    for (double t : thresholds) {
        std::size_t interior = 0, small = 0;
        for (std::size_t i = 0; i < sample.values.size(); ++i) {
            if (sample.tags[i] != RegionTag::Interior) continue;
            ++interior;
            if (std::abs(sample.values[i]) <= t * mx) ++small;
        }
        out.push_back(interior ? static_cast<double>(small) / static_cast<double>(interior) : 0.0);
    }
    return out;
}

/// max |Ψ(0, x′) − (−1)^{N−1} α Ψ(x′, 1)| / max |Ψ| over the node grid.
inline double quasi_periodic_trace_defect(const NodalTensor& psi, double alpha) {
    const std::size_t np = psi.n_particles();
    const std::size_t m = psi.nodes_per_axis();
    const double parity = (np % 2 == 1) ? 1.0 : -1.0;
    double mx = 0.0;
    for (double v : psi.data()) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) return 0.0;
    std::size_t rest = 1;
    for (std::size_t k = 1; k < np; ++k) rest *= m;
    std::vector<std::size_t> a(np), b(np);
    double worst = 0.0;
    for (std::size_t r = 0; r < rest; ++r) {
        std::size_t f = r;
        for (std::size_t k = np; k-- > 1;) {
            a[k] = f % m;
            f /= m;
        }
        a[0] = 0;
        for (std::size_t k = 1; k < np; ++k) b[k - 1] = a[k];
        b[np - 1] = m - 1;
        worst = std::max(worst, std::abs(psi.at(a) - parity * alpha * psi.at(b)));
    }
    return worst / mx;
}

}  // namespace fermigate
