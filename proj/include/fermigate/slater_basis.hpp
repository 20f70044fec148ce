#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fermigate/errors.hpp"

namespace fermigate {

/// C(n, k) in 64-bit arithmetic; saturates at the maximum value on overflow.
inline std::uint64_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        const std::uint64_t num = n - k + i;
        if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
        r = r * num / i;  // exact: r * num is divisible by i at every step
    }
    return r;
}

/// Lexicographic ranking of strictly increasing k-subsets of {0, ..., n-1}.
class CombinationRanker {
public:
    CombinationRanker() = default;
    CombinationRanker(std::size_t n, std::size_t k) : n_(n), k_(k), skip_(k, std::vector<std::uint64_t>(n + 1, 0)) {
        // skip_[i][c] = number of tuples whose i-th entry is < c given entry i-1 = -1.
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t c = 1; c <= n; ++c) {
                const std::size_t j = c - 1;
                skip_[i][c] = skip_[i][c - 1] + (n - 1 - j >= k - 1 - i ? binomial(n - 1 - j, k - 1 - i) : 0);
            }
    }

    [[nodiscard]] std::size_t rank(std::span<const std::uint32_t> tuple) const {
        std::uint64_t r = 0;
        std::size_t lo = 0;
        for (std::size_t i = 0; i < k_; ++i) {
            r += skip_[i][tuple[i]] - skip_[i][lo];
            lo = tuple[i] + 1;
        }
        return static_cast<std::size_t>(r);
    }

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::vector<std::vector<std::uint64_t>> skip_;
};

/// All strictly increasing N-tuples of orbital indices in lexicographic order.
///
/// Indices are 0-based.
class SlaterBasis {
public:
    SlaterBasis() = default;

    SlaterBasis(std::size_t n_orbitals, std::size_t n_particles, std::size_t cap = 100000)
        : n_orbitals_(n_orbitals), n_particles_(n_particles) {
        require(n_particles >= 1, "particle count must be positive");
        require(n_particles <= n_orbitals, "more particles than orbitals");
        const std::uint64_t count = binomial(n_orbitals, n_particles);
        require(count <= cap, "Slater basis exceeds the determinant cap");
        size_ = static_cast<std::size_t>(count);
        tuples_.reserve(size_ * n_particles);
        std::vector<std::uint32_t> t(n_particles);
        for (std::size_t i = 0; i < n_particles; ++i) t[i] = static_cast<std::uint32_t>(i);
        for (std::size_t r = 0; r < size_; ++r) {
            tuples_.insert(tuples_.end(), t.begin(), t.end());
            // next tuple in lexicographic order
            std::size_t i = n_particles;
            while (i > 0 && t[i - 1] == n_orbitals - n_particles + i - 1) --i;
            if (i == 0) break;
            ++t[i - 1];
            for (std::size_t j = i; j < n_particles; ++j) t[j] = t[j - 1] + 1;
        }
        ranker_ = CombinationRanker(n_orbitals, n_particles);
    }

    [[nodiscard]] std::size_t n_orbitals() const noexcept { return n_orbitals_; }
    [[nodiscard]] std::size_t n_particles() const noexcept { return n_particles_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }

    [[nodiscard]] std::span<const std::uint32_t> tuple(std::size_t r) const {
        return {tuples_.data() + r * n_particles_, n_particles_};
    }

    /// Position of a strictly increasing tuple in the list.
    [[nodiscard]] std::size_t rank(std::span<const std::uint32_t> t) const { return ranker_.rank(t); }

private:
    std::size_t n_orbitals_ = 0;
    std::size_t n_particles_ = 0;
    std::size_t size_ = 0;
    std::vector<std::uint32_t> tuples_;
    CombinationRanker ranker_;
};

inline SlaterBasis enumerate_slater_basis(std::size_t n_orbitals, std::size_t n_particles,
                                          std::size_t cap = 100000) {
    return SlaterBasis(n_orbitals, n_particles, cap);
}

/// Coefficients over a SlaterBasis (orthonormal-orbital representation).
struct WaveVector {
    std::vector<double> coefficients;
    bool normalized = false;
};

namespace detail {

/// Removes orbital `a` from the sorted occupation list; returns the fermionic sign.
inline int annihilate(std::vector<std::uint32_t>& occ, std::uint32_t a) {
    const auto it = std::lower_bound(occ.begin(), occ.end(), a);
    const auto pos = it - occ.begin();
    occ.erase(it);
    return pos % 2 == 0 ? 1 : -1;
}

/// Inserts orbital `p` (not occupied) into the sorted list; returns the sign.
inline int create(std::vector<std::uint32_t>& occ, std::uint32_t p) {
    const auto it = std::lower_bound(occ.begin(), occ.end(), p);
    const auto pos = it - occ.begin();
    occ.insert(it, p);
    return pos % 2 == 0 ? 1 : -1;
}

}  // namespace detail

}  // namespace fermigate
