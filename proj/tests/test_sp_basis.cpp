#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fermigate/grid_basis.hpp"
#include "oracles.hpp"

using namespace fermigate;

namespace {

std::vector<BoundarySpec> all_bcs() {
    return {BoundarySpec::dirichlet(),           BoundarySpec::dirichlet_left(),
            BoundarySpec::dirichlet_right(),     BoundarySpec::free(),
            BoundarySpec::quasi_periodic(1.0),   BoundarySpec::quasi_periodic(-1.0),
            BoundarySpec::quasi_periodic(0.37),  BoundarySpec::line(2.0, -3.0),
            BoundarySpec::line(0.0, 1.0)};
}

// φ_d(x) from the descriptor, evaluated through oracle hats.
double basis_fn(const GridBasis& g, std::size_t d, double x) {
    double s = 0.0;
    for (const auto& [node, w] : g.dofs()[d].support) s += w * oracle::hat(node, g.n_cells(), x);
    return s;
}

double basis_fn_derivative(const GridBasis& g, std::size_t d, double x) {
    double s = 0.0;
    for (const auto& [node, w] : g.dofs()[d].support) s += w * oracle::hat_derivative(node, g.n_cells(), x);
    return s;
}

bool exactly_symmetric(const SymMatrix& a) {
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j)
            if (a(i, j) != a(j, i)) return false;
    return true;
}

}  // namespace

TEST(SpBasis, DofCountsFollowBoundaryKind) {
    EXPECT_EQ(GridBasis(8, BoundarySpec::dirichlet()).dim(), 7u);
    EXPECT_EQ(GridBasis(8, BoundarySpec::free()).dim(), 9u);
    EXPECT_EQ(GridBasis(8, BoundarySpec::dirichlet_left()).dim(), 8u);
    EXPECT_EQ(GridBasis(8, BoundarySpec::dirichlet_right()).dim(), 8u);
    EXPECT_EQ(GridBasis(8, BoundarySpec::quasi_periodic(-1.0)).dim(), 8u);
    EXPECT_EQ(GridBasis(8, BoundarySpec::line(1.0, 2.0)).dim(), 8u);
}

TEST(SpBasis, DirichletHasOnlyZeroTraces) {
    const GridBasis g(8, BoundarySpec::dirichlet());
    for (const auto& d : g.dofs()) {
        EXPECT_EQ(d.trace0, 0.0);
        EXPECT_EQ(d.trace1, 0.0);
    }
}

TEST(SpBasis, FreeHasTwoTracedDofs) {
    const GridBasis g(8, BoundarySpec::free());
    int traced = 0;
    for (const auto& d : g.dofs()) traced += (d.trace0 != 0.0 || d.trace1 != 0.0) ? 1 : 0;
    EXPECT_EQ(traced, 2);
}

TEST(SpBasis, CoupledDofSitsLastWithTracePair) {
    const GridBasis g(8, BoundarySpec::quasi_periodic(-1.0));
    const auto& last = g.dofs().back();
    EXPECT_EQ(last.trace0, -1.0);
    EXPECT_EQ(last.trace1, 1.0);
    EXPECT_EQ(last.trace0 - (-1.0) * last.trace1, 0.0);
}

TEST(SpBasis, TracesLieInTheBoundarySubspace) {
    for (const auto& bc : all_bcs()) {
        const GridBasis g(12, bc);
        for (const auto& d : g.dofs()) {
            switch (bc.kind) {
                case BoundarySpec::Kind::QuasiPeriodic:
                    EXPECT_EQ(d.trace0 - bc.alpha * d.trace1, 0.0) << bc.name();
                    break;
                case BoundarySpec::Kind::Line:
                    EXPECT_EQ(d.trace0 * bc.b - d.trace1 * bc.a, 0.0) << bc.name();
                    break;
                case BoundarySpec::Kind::DirichletBoth:
                    EXPECT_EQ(d.trace0, 0.0);
                    EXPECT_EQ(d.trace1, 0.0);
                    break;
                case BoundarySpec::Kind::DirichletLeft: EXPECT_EQ(d.trace0, 0.0); break;
                case BoundarySpec::Kind::DirichletRight: EXPECT_EQ(d.trace1, 0.0); break;
                case BoundarySpec::Kind::Free: break;
            }
            // trace fields agree with the function itself
            EXPECT_NEAR(basis_fn(g, static_cast<std::size_t>(&d - g.dofs().data()), 0.0), d.trace0, 1e-15);
            EXPECT_NEAR(basis_fn(g, static_cast<std::size_t>(&d - g.dofs().data()), 1.0), d.trace1, 1e-15);
        }
    }
}

TEST(SpBasis, RejectsBadInput) {
    EXPECT_THROW(GridBasis(3, BoundarySpec::dirichlet()), InvalidArgument);
    EXPECT_THROW(GridBasis(8, BoundarySpec::quasi_periodic(0.0)), InvalidArgument);
    EXPECT_THROW(GridBasis(8, BoundarySpec::quasi_periodic(std::nan(""))), InvalidArgument);
    EXPECT_THROW(GridBasis(8, BoundarySpec::line(0.0, 0.0)), InvalidArgument);
}

TEST(SpBasis, ElementEntries) {
    const std::size_t n = 10;
    const GridBasis g(n, BoundarySpec::dirichlet());
    const double h = 0.1;
    const SymMatrix m = assemble_overlap(g), k = assemble_stiffness(g);
    EXPECT_NEAR(m(3, 3), 2.0 * h / 3.0, 1e-15);
    EXPECT_NEAR(m(3, 4), h / 6.0, 1e-15);
    EXPECT_EQ(m(3, 5), 0.0);
    EXPECT_NEAR(k(3, 3), 2.0 / h, 1e-12);
    EXPECT_NEAR(k(3, 4), -1.0 / h, 1e-12);
    EXPECT_EQ(k(3, 6), 0.0);
}

TEST(SpBasis, MatricesMatchQuadratureOracle) {
    // Gauss quadrature of the basis functions built from the descriptors
    for (const auto& bc : all_bcs()) {
        const GridBasis g(9, bc);
        const SymMatrix m = assemble_overlap(g), k = assemble_stiffness(g);
        for (std::size_t i = 0; i < g.dim(); ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double mij =
                    oracle::integrate([&](double x) { return basis_fn(g, i, x) * basis_fn(g, j, x); }, 9, 4);
                const double kij = oracle::integrate(
                    [&](double x) { return basis_fn_derivative(g, i, x) * basis_fn_derivative(g, j, x); }, 9, 4);
                EXPECT_NEAR(m(i, j), mij, 1e-13) << bc.name() << " " << i << "," << j;
                EXPECT_NEAR(k(i, j), kij, 1e-11) << bc.name() << " " << i << "," << j;
            }
    }
}

TEST(SpBasis, FreeStiffnessAnnihilatesConstants) {
    const GridBasis g(16, BoundarySpec::free());
    const Vector y = assemble_stiffness(g).multiply(Vector(g.dim(), 1.0));
    EXPECT_LT(max_abs(y), 1e-12);
}

TEST(SpBasis, DeltaAtNodeHitsOneDiagonalEntry) {
    const GridBasis g(10, BoundarySpec::dirichlet());
    const double g0 = -7.5;
    const SymMatrix p = assemble_potential(g, DeltaPotential{0.4, g0});
    // node 4 is dof 3
    for (std::size_t i = 0; i < g.dim(); ++i)
        for (std::size_t j = 0; j < g.dim(); ++j) EXPECT_EQ(p(i, j), (i == 3 && j == 3) ? g0 : 0.0);
}

TEST(SpBasis, DeltaOffNodeIsRankOne) {
    const GridBasis g(10, BoundarySpec::free());
    const double x0 = 0.537, g0 = 3.0;
    const SymMatrix p = assemble_potential(g, DeltaPotential{x0, g0});
    for (std::size_t i = 0; i < g.dim(); ++i)
        for (std::size_t j = 0; j < g.dim(); ++j)
            EXPECT_NEAR(p(i, j), g0 * basis_fn(g, i, x0) * basis_fn(g, j, x0), 1e-14);
}

TEST(SpBasis, DeltaAtEndpoint) {
    // contributes only through dofs traced at that end
    const SymMatrix pd = assemble_potential(GridBasis(8, BoundarySpec::dirichlet()), DeltaPotential{0.0, 5.0});
    for (std::size_t i = 0; i < pd.dim(); ++i)
        for (std::size_t j = 0; j < pd.dim(); ++j) EXPECT_EQ(pd(i, j), 0.0);
    const GridBasis qp(8, BoundarySpec::quasi_periodic(-2.0));
    const SymMatrix p = assemble_potential(qp, DeltaPotential{0.0, 5.0});
    const std::size_t c = qp.dim() - 1;
    EXPECT_NEAR(p(c, c), 5.0 * 4.0, 1e-14);
    const SymMatrix p1 = assemble_potential(qp, DeltaPotential{1.0, 5.0});
    EXPECT_NEAR(p1(c, c), 5.0, 1e-14);
}

TEST(SpBasis, UnitSampledAndHMinusOneReduceToOverlap) {
    for (const auto& bc : all_bcs()) {
        const GridBasis g(11, bc);
        const SymMatrix m = assemble_overlap(g);
        const SymMatrix ps = assemble_potential(g, SampledPotential{Vector(12, 1.0)});
        const SymMatrix ph = assemble_potential(g, HMinusOnePotential{1.0, Vector(11, 0.0)});
        EXPECT_LE(max_abs_diff(m, ps), 1e-14) << bc.name();
        EXPECT_LE(max_abs_diff(m, ph), 1e-14) << bc.name();
    }
}

TEST(SpBasis, SampledMatchesQuadratureOracle) {
    const std::size_t n = 8;
    const GridBasis g(n, BoundarySpec::quasi_periodic(0.5));
    const SampledPotential v = sampled_from_function(n, [](double x) { return std::sin(5.0 * x) + x * x; });
    const SymMatrix p = assemble_potential(g, v);
    auto vlin = [&](double x) {
        double s = 0.0;
        for (std::size_t i = 0; i <= n; ++i) s += v.values[i] * oracle::hat(i, n, x);
        return s;
    };
    for (std::size_t i = 0; i < g.dim(); ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double ref = oracle::integrate([&](double x) { return vlin(x) * basis_fn(g, i, x) * basis_fn(g, j, x); },
                                                 n, 4);
            EXPECT_NEAR(p(i, j), ref, 1e-14);
        }
}

TEST(SpBasis, HMinusOneDerivativeTermMatchesOracle) {
    const std::size_t n = 8;
    const GridBasis g(n, BoundarySpec::free());
    Vector vc(n);
    for (std::size_t c = 0; c < n; ++c) vc[c] = std::cos(static_cast<double>(c));
    const SymMatrix p = assemble_potential(g, HMinusOnePotential{0.0, vc});
    for (std::size_t i = 0; i < g.dim(); ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double ref = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                // ∫_c (φ_iφ_j)' = [φ_iφ_j] across the cell
                const double a = static_cast<double>(c) / n, b = static_cast<double>(c + 1) / n;
                const double e = 1e-13;
                ref += vc[c] * (basis_fn(g, i, b - e) * basis_fn(g, j, b - e) - basis_fn(g, i, a + e) * basis_fn(g, j, a + e));
            }
            EXPECT_NEAR(p(i, j), ref, 1e-11);
        }
}

TEST(SpBasis, PotentialInputValidation) {
    const GridBasis g(8, BoundarySpec::dirichlet());
    EXPECT_THROW(assemble_potential(g, DeltaPotential{1.5, 1.0}), InvalidArgument);
    EXPECT_THROW(assemble_potential(g, DeltaPotential{-0.1, 1.0}), InvalidArgument);
    EXPECT_THROW(assemble_potential(g, HMinusOnePotential{1.0, Vector(7, 0.0)}), InvalidArgument);
    EXPECT_THROW(assemble_potential(g, SampledPotential{Vector(8, 0.0)}), InvalidArgument);
}

TEST(SpBasis, AllAssembledMatricesExactlySymmetric) {
    Vector vc(13);
    for (std::size_t c = 0; c < 13; ++c) vc[c] = 0.1 * static_cast<double>(c * c);
    for (const auto& bc : all_bcs()) {
        const GridBasis g(13, bc);
        EXPECT_TRUE(exactly_symmetric(assemble_overlap(g)));
        EXPECT_TRUE(exactly_symmetric(assemble_stiffness(g)));
        EXPECT_TRUE(exactly_symmetric(assemble_potential(g, DeltaPotential{0.31, -2.0})));
        EXPECT_TRUE(exactly_symmetric(assemble_potential(g, HMinusOnePotential{0.7, vc})));
        EXPECT_TRUE(exactly_symmetric(
            assemble_potential(g, sampled_from_function(13, [](double x) { return std::exp(x); }))));
    }
}

TEST(SpBasis, OverlapPositiveDefinite) {
    for (const auto& bc : all_bcs())
        for (std::size_t n : {std::size_t{4}, std::size_t{57}, std::size_t{10000}}) {
            EXPECT_TRUE(ProfileLdlt(assemble_overlap(GridBasis(n, bc))).positive_definite()) << bc.name() << " " << n;
        }
}

TEST(SpBasis, StiffnessKernelDimension) {
    for (const auto& bc : all_bcs()) {
        const SymMatrix k = assemble_stiffness(GridBasis(40, bc));
        const std::size_t zeros = ProfileLdlt(k, 1e-12 * k.norm1()).zero_pivots();
        const bool constants = bc.kind == BoundarySpec::Kind::Free ||
                               (bc.kind == BoundarySpec::Kind::QuasiPeriodic && bc.alpha == 1.0);
        EXPECT_EQ(zeros, constants ? 1u : 0u) << bc.name();
    }
}

TEST(SpBasis, FormBound) {
    const GridBasis g(32, BoundarySpec::dirichlet());
    EXPECT_EQ(estimate_form_bound(g, SampledPotential{Vector(33, 0.0)}, 0.1, 200), 0.0);
    EXPECT_LE(estimate_form_bound(g, SampledPotential{Vector(33, 1.0)}, 0.3, 200), 1.0);
    const double c = estimate_form_bound(g, DeltaPotential{0.5, 1.0}, 0.5, 500);
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_GE(c, 0.0);

    // oracle: exhaustive maximization over an independent sample set must not exceed the reported C
    const SymMatrix m = assemble_overlap(g), k = assemble_stiffness(g);
    const SymMatrix p = assemble_potential(g, DeltaPotential{0.5, 1.0});
    std::mt19937_64 rng(20240607);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    Vector psi(g.dim());
    for (int t = 0; t < 500; ++t) {
        for (double& x : psi) x = normal(rng);
        const double mass = m.quadratic_form(psi);
        worst = std::max(worst, (std::abs(p.quadratic_form(psi)) - 0.5 * (k.quadratic_form(psi) + mass)) / mass);
    }
    EXPECT_EQ(c, worst);
    EXPECT_THROW(estimate_form_bound(g, NoPotential{}, 0.0, 200), InvalidArgument);
    EXPECT_THROW(estimate_form_bound(g, NoPotential{}, 0.1, 99), InvalidArgument);
}
