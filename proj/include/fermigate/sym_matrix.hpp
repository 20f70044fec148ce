#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"

namespace fermigate {

/// Symmetric matrix in profile (skyline) storage.
///
/// Row i keeps the lower-triangle entries from column first_col(i) up to the
/// diagonal. A dense matrix is the special case first_col(i) == 0. Only one
/// triangle is stored, so entry(i, j) and entry(j, i) are the same double.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(std::vector<std::size_t> first_col) : first_(std::move(first_col)) {
        offset_.resize(first_.size() + 1, 0);
        for (std::size_t i = 0; i < first_.size(); ++i) {
            require(first_[i] <= i, "SymMatrix: profile start beyond diagonal");
            offset_[i + 1] = offset_[i] + (i - first_[i] + 1);
        }
        values_.assign(offset_.back(), 0.0);
    }

    static SymMatrix dense(std::size_t n) { return SymMatrix(std::vector<std::size_t>(n, 0)); }

    static SymMatrix banded(std::size_t n, std::size_t half_bandwidth) {
        std::vector<std::size_t> first(n);
        for (std::size_t i = 0; i < n; ++i) first[i] = i > half_bandwidth ? i - half_bandwidth : 0;
        return SymMatrix(std::move(first));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return first_.size(); }
    [[nodiscard]] std::size_t first_col(std::size_t i) const noexcept { return first_[i]; }
    [[nodiscard]] const std::vector<std::size_t>& profile() const noexcept { return first_; }
    [[nodiscard]] std::size_t stored_entries() const noexcept { return values_.size(); }

    [[nodiscard]] std::size_t bandwidth() const noexcept {
        std::size_t bw = 0;
        for (std::size_t i = 0; i < first_.size(); ++i) bw = std::max(bw, i - first_[i]);
        return bw;
    }

    [[nodiscard]] bool in_profile(std::size_t i, std::size_t j) const noexcept {
        if (i < j) std::swap(i, j);
        return j >= first_[i];
    }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept {
        if (i < j) std::swap(i, j);
        if (j < first_[i]) return 0.0;
        return values_[offset_[i] + (j - first_[i])];
    }

    double& ref(std::size_t i, std::size_t j) {
        if (i < j) std::swap(i, j);
        require(j >= first_[i], "SymMatrix: entry (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") outside profile");
        return values_[offset_[i] + (j - first_[i])];
    }

    void add(std::size_t i, std::size_t j, double v) { ref(i, j) += v; }
    void set(std::size_t i, std::size_t j, double v) { ref(i, j) = v; }

    /// Stored lower-row slice: columns first_col(i) .. i.
    [[nodiscard]] std::span<const double> lower_row(std::size_t i) const noexcept {
        return {values_.data() + offset_[i], i - first_[i] + 1};
    }
    [[nodiscard]] std::span<double> lower_row(std::size_t i) noexcept {
        return {values_.data() + offset_[i], i - first_[i] + 1};
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        require(x.size() == dim() && y.size() == dim(), "SymMatrix::multiply: dimension mismatch");
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < dim(); ++i) {
            const auto r = lower_row(i);
            const std::size_t f = first_[i];
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < r.size(); ++k) {
                acc += r[k] * x[f + k];
                y[f + k] += r[k] * x[i];
            }
            y[i] += acc + r.back() * x[i];
        }
    }

    [[nodiscard]] Vector multiply(std::span<const double> x) const {
        Vector y(dim());
        multiply(x, y);
        return y;
    }

    [[nodiscard]] double quadratic_form(std::span<const double> x) const { return dot(x, multiply(x)); }

    /// Maximum absolute row sum (equals the column-sum norm by symmetry).
    [[nodiscard]] double norm1() const {
        Vector rowsum(dim(), 0.0);
        for (std::size_t i = 0; i < dim(); ++i) {
            const auto r = lower_row(i);
            const std::size_t f = first_[i];
            for (std::size_t k = 0; k + 1 < r.size(); ++k) {
                rowsum[i] += std::abs(r[k]);
                rowsum[f + k] += std::abs(r[k]);
            }
            rowsum[i] += std::abs(r.back());
        }
        return rowsum.empty() ? 0.0 : *std::max_element(rowsum.begin(), rowsum.end());
    }

    [[nodiscard]] Matrix to_dense() const {
        Matrix d(dim(), dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            const auto r = lower_row(i);
            for (std::size_t k = 0; k < r.size(); ++k) {
                d(i, first_[i] + k) = r[k];
                d(first_[i] + k, i) = r[k];
            }
        }
        return d;
    }

    /// Builds a dense-profile matrix from the lower triangle of `a`.
    static SymMatrix from_dense(const Matrix& a) {
        require(a.rows() == a.cols(), "SymMatrix::from_dense: matrix not square");
        SymMatrix s = dense(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j <= i; ++j) s.values_[s.offset_[i] + j] = a(i, j);
        return s;
    }

    /// this + alpha * other; both operands must share a profile.
    [[nodiscard]] SymMatrix plus(const SymMatrix& other, double alpha = 1.0) const {
        require(other.first_ == first_, "SymMatrix::plus: profile mismatch");
        SymMatrix r = *this;
        for (std::size_t k = 0; k < values_.size(); ++k) r.values_[k] += alpha * other.values_[k];
        return r;
    }

    [[nodiscard]] SymMatrix scaled(double alpha) const {
        SymMatrix r = *this;
        for (double& v : r.values_) v *= alpha;
        return r;
    }

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

private:
    std::vector<std::size_t> first_;
    std::vector<std::size_t> offset_;
    std::vector<double> values_;
};

/// Max-abs entry difference of two symmetric matrices (profiles may differ).
inline double max_abs_diff(const SymMatrix& a, const SymMatrix& b) {
    require(a.dim() == b.dim(), "max_abs_diff: dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const std::size_t f = std::min(a.first_col(i), b.first_col(i));
        for (std::size_t j = f; j <= i; ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    }
    return m;
}

/// Profile LDLᵀ factorization without pivoting; L keeps the profile of A.
///
/// With `zero_pivot_tol` > 0 the factorization runs through semidefinite
/// input: pivots with |d| below the threshold are recorded and zeroed, which
/// makes the number of such pivots a kernel-dimension estimate.
class ProfileLdlt {
public:
    explicit ProfileLdlt(const SymMatrix& a, double zero_pivot_tol = 0.0) : l_(a), d_(a.dim(), 0.0) {
        const std::size_t n = a.dim();
        Vector t(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = l_.lower_row(i);
            const std::size_t fi = l_.first_col(i);
            double diag = row.back();
            for (std::size_t j = fi; j < i; ++j) {
                const std::size_t fj = l_.first_col(j);
                const std::size_t start = std::max(fi, fj);
                double s = row[j - fi];
                const auto rowj = l_.lower_row(j);
                for (std::size_t k = start; k < j; ++k) s -= t[k] * rowj[k - fj];
                t[j] = s;
                row[j - fi] = d_[j] != 0.0 ? s / d_[j] : 0.0;
                diag -= s * row[j - fi];
            }
            row.back() = 1.0;
            if (std::abs(diag) <= zero_pivot_tol) {
                ++zero_pivots_;
                diag = 0.0;
            } else if (diag < 0.0) {
                ++negative_pivots_;
            }
            if (!std::isfinite(diag)) throw IndefiniteMatrix("LDLT: non-finite pivot", i);
            d_[i] = diag;
        }
    }

    [[nodiscard]] const Vector& pivots() const noexcept { return d_; }
    [[nodiscard]] std::size_t zero_pivots() const noexcept { return zero_pivots_; }
    [[nodiscard]] std::size_t negative_pivots() const noexcept { return negative_pivots_; }
    [[nodiscard]] bool positive_definite() const noexcept {
        return zero_pivots_ == 0 && negative_pivots_ == 0 &&
               std::all_of(d_.begin(), d_.end(), [](double v) { return v > 0.0; });
    }

    /// Solves A x = b; requires all pivots nonzero.
    [[nodiscard]] Vector solve(std::span<const double> b) const {
        const std::size_t n = d_.size();
        require(b.size() == n, "ProfileLdlt::solve: dimension mismatch");
        Vector x(b.begin(), b.end());
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = l_.lower_row(i);
            const std::size_t f = l_.first_col(i);
            double s = x[i];
            for (std::size_t k = f; k < i; ++k) s -= row[k - f] * x[k];
            x[i] = s;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (d_[i] == 0.0) throw IndefiniteMatrix("LDLT solve: zero pivot", i);
            x[i] /= d_[i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            const auto row = l_.lower_row(ii);
            const std::size_t f = l_.first_col(ii);
            const double xi = x[ii];
            for (std::size_t k = f; k < ii; ++k) x[k] -= row[k - f] * xi;
        }
        return x;
    }

    /// Unit lower factor; the diagonal slot holds 1.
    [[nodiscard]] const SymMatrix& factor() const noexcept { return l_; }

private:
    SymMatrix l_;
    Vector d_;
    std::size_t zero_pivots_ = 0;
    std::size_t negative_pivots_ = 0;
};

/// Dense lower Cholesky factor of a positive definite profile matrix.
inline Matrix cholesky_lower(const SymMatrix& a) {
    const ProfileLdlt ldlt(a);
    const std::size_t n = a.dim();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = ldlt.pivots()[i];
        if (!(d > 0.0)) throw IndefiniteMatrix("Cholesky: matrix is not positive definite", i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = ldlt.factor().lower_row(i);
        const std::size_t f = ldlt.factor().first_col(i);
        for (std::size_t j = f; j <= i; ++j) l(i, j) = row[j - f] * std::sqrt(ldlt.pivots()[j]);
    }
    return l;
}

/// Solves L X = B in place for lower-triangular L (B overwritten column-wise).
inline void solve_lower_inplace(const Matrix& l, Matrix& b) {
    const std::size_t n = l.rows();
    require(b.rows() == n, "solve_lower_inplace: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        auto bi = b.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = l(i, k);
            if (lik == 0.0) continue;
            axpy(-lik, b.row(k), bi);
        }
        scale(bi, 1.0 / l(i, i));
    }
}

/// Solves Lᵀ X = B in place for lower-triangular L.
inline void solve_upper_t_inplace(const Matrix& l, Matrix& b) {
    const std::size_t n = l.rows();
    require(b.rows() == n, "solve_upper_t_inplace: dimension mismatch");
    for (std::size_t ii = n; ii-- > 0;) {
        auto bi = b.row(ii);
        scale(bi, 1.0 / l(ii, ii));
        for (std::size_t k = 0; k < ii; ++k) {
            const double lik = l(ii, k);
            if (lik == 0.0) continue;
            axpy(-lik, bi, b.row(k));
        }
    }
}

}  // namespace fermigate
