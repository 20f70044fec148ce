#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fermigate/mb_spectrum.hpp"
#include "fermigate/wavefunction.hpp"
#include "oracles.hpp"

using namespace fermigate;

namespace {

using std::numbers::pi;

Vector unit_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Vector v(n);
    for (double& x : v) x = g(rng);
    scale(v, 1.0 / norm2(v));
    return v;
}

// ⟨f, φ_i⟩ / ⟨1, φ_i⟩ over the full hat set, by Gauss quadrature.
Vector lumped(const std::function<double(double)>& f, std::size_t cells) {
    Vector out(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) {
        const double num = oracle::integrate([&](double x) { return f(x) * oracle::hat(i, cells, x); }, cells, 6);
        const double den = (i == 0 || i == cells ? 0.5 : 1.0) / static_cast<double>(cells);
        out[i] = num / den;
    }
    return out;
}

double orbital_at(const OrbitalSet& orb, std::size_t a, double x) {
    double s = 0.0;
    for (const auto& [dof, w] : orb.grid.evaluate(x)) s += w * orb.coefficients(dof, a);
    return s;
}

}  // namespace

TEST(Wavefunction, DeterminantDensity) {
    const std::size_t cells = 12;
    const OrbitalSet orb = cholesky_orbitals(GridBasis(cells, BoundarySpec::free()));
    const SlaterBasis b(orb.size(), 2);
    Vector psi(b.size(), 0.0);
    const std::size_t idx = b.rank(std::vector<std::uint32_t>{1, 4});
    psi[idx] = 1.0;
    const Vector rho = reduced_density(psi, b, orb);
    const Vector ref = lumped(
        [&](double x) { return std::pow(orbital_at(orb, 1, x), 2) + std::pow(orbital_at(orb, 4, x), 2); }, cells);
    for (std::size_t i = 0; i <= cells; ++i) EXPECT_NEAR(rho[i], ref[i], 1e-11) << i;
}

TEST(Wavefunction, DeterminantPairDensity) {
    const std::size_t cells = 8;
    const OrbitalSet orb = cholesky_orbitals(GridBasis(cells, BoundarySpec::quasi_periodic(-1.0)));
    const SlaterBasis b(orb.size(), 2);
    Vector psi(b.size(), 0.0);
    psi[b.rank(std::vector<std::uint32_t>{0, 3})] = 1.0;
    const Matrix rho2 = reduced_pair_density(psi, b, orb);
    // |a(x)c(y) - c(x)a(y)|² expands into separable products of 1D lumped projections
    const Vector aa = lumped([&](double x) { return std::pow(orbital_at(orb, 0, x), 2); }, cells);
    const Vector cc = lumped([&](double x) { return std::pow(orbital_at(orb, 3, x), 2); }, cells);
    const Vector ac = lumped([&](double x) { return orbital_at(orb, 0, x) * orbital_at(orb, 3, x); }, cells);
    for (std::size_t i = 0; i <= cells; ++i)
        for (std::size_t j = 0; j <= cells; ++j)
            EXPECT_NEAR(rho2(i, j), aa[i] * cc[j] + cc[i] * aa[j] - 2.0 * ac[i] * ac[j], 1e-10);
}

TEST(Wavefunction, FreeDirichletGroundDensity) {
    const auto [op, sr] = solve_problem(NoPotential{}, NoInteraction{}, BoundarySpec::dirichlet(), 2, 40, 1);
    const Vector rho = reduced_density(sr.eigenvectors[0], op);
    ASSERT_EQ(rho.size(), 41u);
    for (std::size_t i = 0; i <= 40; ++i) {
        const double x = static_cast<double>(i) / 40.0;
        const double ref = 2 * std::pow(std::sin(pi * x), 2) + 2 * std::pow(std::sin(2 * pi * x), 2);
        EXPECT_NEAR(rho[i], ref, 2e-2) << x;
    }
}

TEST(Wavefunction, Normalizations) {
    for (std::size_t np : {std::size_t{2}, std::size_t{3}}) {
        const OrbitalSet orb = eigen_orbitals(GridBasis(10, BoundarySpec::dirichlet_right()), DeltaPotential{0.4, 2.0});
        const SlaterBasis b(orb.size(), np);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Vector psi = unit_vector(b.size(), seed + 10 * np);
            const Vector rho = reduced_density(psi, b, orb);
            EXPECT_NEAR(trapezoid_integral(rho), static_cast<double>(np), 1e-10);
            const Matrix rho2 = reduced_pair_density(psi, b, orb);
            EXPECT_NEAR(trapezoid_integral(rho2), static_cast<double>(np * (np - 1)), 1e-8);
            for (std::size_t i = 0; i < rho2.rows(); ++i) {
                for (std::size_t j = 0; j < rho2.cols(); ++j) EXPECT_EQ(rho2(i, j), rho2(j, i));
                EXPECT_GE(rho2(i, i), -1e-10);
            }
        }
    }
}

TEST(Wavefunction, TensorDensityMatchesReducedMatrixPath) {
    const OrbitalSet orb = cholesky_orbitals(GridBasis(9, BoundarySpec::free()));
    const SlaterBasis b(orb.size(), 3);
    const Vector psi = unit_vector(b.size(), 77);
    const Vector a = reduced_density(psi, b, orb);
    const Vector c = reduced_density(to_nodal_tensor(psi, b, orb));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], c[i], 1e-11);
}

TEST(Wavefunction, AntisymmetricUnderSwap) {
    const OrbitalSet orb = eigen_orbitals(GridBasis(16, BoundarySpec::quasi_periodic(1.0)), DeltaPotential{0.5, -10.0});
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t np : {std::size_t{2}, std::size_t{3}}) {
        const SlaterBasis b(8, np);
        OrbitalSet eight{orb.grid, Matrix(orb.grid.dim(), 8), {}};
        for (std::size_t a = 0; a < 8; ++a) eight.coefficients.set_column(a, orb.coefficients.column(a));
        const Vector psi = unit_vector(b.size(), np);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> x(np);
            for (double& xi : x) xi = u(rng);
            const double v = evaluate_wavefunction(psi, b, eight, x);
            std::swap(x[0], x[np - 1]);
            const double w = evaluate_wavefunction(psi, b, eight, x);
            EXPECT_NEAR(v, -w, 1e-12 * std::max(1.0, std::abs(v)));
        }
    }
}

TEST(Wavefunction, NodalTensorAgreesWithPointEvaluation) {
    const OrbitalSet orb = cholesky_orbitals(GridBasis(6, BoundarySpec::dirichlet()));
    const SlaterBasis b(orb.size(), 3);
    const Vector psi = unit_vector(b.size(), 5);
    const NodalTensor t = to_nodal_tensor(psi, b, orb);
    std::vector<std::size_t> idx(3);
    for (std::size_t f = 0; f < t.size(); ++f) {
        t.unflat(f, idx);
        const std::vector<double> x{idx[0] / 6.0, idx[1] / 6.0, idx[2] / 6.0};
        EXPECT_NEAR(t.data()[f], evaluate_wavefunction(psi, b, orb, x), 1e-12);
    }
}

TEST(Wavefunction, AntisymmetricCoefficientsAreOrthonormalEmbedding) {
    const SlaterBasis b(6, 3);
    const Vector psi = unit_vector(b.size(), 9);
    const std::vector<double> a = antisymmetric_coefficients(psi, b);
    EXPECT_NEAR(norm2(a), 1.0, 1e-14);
    EXPECT_THROW(antisymmetric_coefficients(Vector(3), b), InvalidArgument);
}

TEST(Wavefunction, PairDensityNeedsTwoParticles) {
    const OrbitalSet orb = cholesky_orbitals(GridBasis(6, BoundarySpec::dirichlet()));
    EXPECT_THROW(reduced_pair_density(Vector(orb.size(), 0.0), SlaterBasis(orb.size(), 1), orb), InvalidArgument);
}

TEST(Wavefunction, TrapezoidHelpers) {
    EXPECT_NEAR(trapezoid_integral(Vector(11, 3.0)), 3.0, 1e-15);
    Matrix ones(5, 5, 2.0);
    EXPECT_NEAR(trapezoid_integral(ones), 2.0, 1e-15);
}
