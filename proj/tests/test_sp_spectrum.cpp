#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fermigate/sp_spectrum.hpp"
#include "oracles.hpp"

using namespace fermigate;

namespace {

constexpr double pi2 = std::numbers::pi * std::numbers::pi;

SpectralResult solve(std::size_t n, BoundarySpec bc, const PotentialSpec& v, std::size_t k) {
    return solve_sp_eig(GridBasis(n, bc), v, k);
}

SpectralResult with_values(std::vector<double> ev) {
    SpectralResult r;
    r.eigenvalues = std::move(ev);
    r.k_requested = r.eigenvalues.size();
    return r;
}

}  // namespace

TEST(SpSpectrum, FreeDirichletMatchesSquares) {
    const auto r = solve(200, BoundarySpec::dirichlet(), NoPotential{}, 5);
    ASSERT_EQ(r.eigenvalues.size(), 5u);
    for (std::size_t k = 1; k <= 5; ++k) {
        const double exact = static_cast<double>(k * k) * pi2;
        EXPECT_LE(std::abs(r.eigenvalues[k - 1] - exact) / exact, 2e-3) << k;
    }
    EXPECT_NEAR(r.eigenvalues[0], 9.8696, 2e-2);
}

TEST(SpSpectrum, FreePeriodic) {
    const auto r = solve(200, BoundarySpec::quasi_periodic(1.0), NoPotential{}, 3);
    EXPECT_LE(std::abs(r.eigenvalues[0]), 1e-8 * 4.0 * pi2);
    EXPECT_NEAR(r.eigenvalues[1] / (4.0 * pi2), 1.0, 2e-3);
    EXPECT_NEAR(r.eigenvalues[2] / (4.0 * pi2), 1.0, 2e-3);
}

TEST(SpSpectrum, FreeAntiPeriodic) {
    const auto r = solve(200, BoundarySpec::quasi_periodic(-1.0), NoPotential{}, 3);
    EXPECT_NEAR(r.eigenvalues[0] / pi2, 1.0, 2e-3);
    EXPECT_NEAR(r.eigenvalues[1] / pi2, 1.0, 2e-3);
    EXPECT_NEAR(r.eigenvalues[2] / (9.0 * pi2), 1.0, 2e-3);
}

TEST(SpSpectrum, DeltaWellAgainstShooting) {
    const auto ref = oracle::delta_well_dirichlet(0.5, -10.0, 3);
    ASSERT_EQ(ref.size(), 3u);
    EXPECT_LT(ref[0], pi2);
    const auto r = solve(400, BoundarySpec::dirichlet(), DeltaPotential{0.5, -10.0}, 3);
    EXPECT_LT(r.eigenvalues[0], pi2);
    for (std::size_t i = 0; i < 3; ++i) {
        // four significant digits
        EXPECT_LE(std::abs(r.eigenvalues[i] - ref[i]) / std::abs(ref[i]), 5e-4) << i;
    }
}

TEST(SpSpectrum, OffCenterDeltaAgainstShooting) {
    const auto ref = oracle::delta_well_dirichlet(0.3, 4.0, 2);
    const auto r = solve(300, BoundarySpec::dirichlet(), DeltaPotential{0.3, 4.0}, 2);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_LE(std::abs(r.eigenvalues[i] - ref[i]) / ref[i], 5e-4) << i;
}

TEST(SpSpectrum, SecondOrderConvergence) {
    std::vector<SpectralResult> rs;
    for (std::size_t n : {std::size_t{100}, std::size_t{200}, std::size_t{400}})
        rs.push_back(solve(n, BoundarySpec::dirichlet(), NoPotential{}, 5));
    for (std::size_t k = 1; k <= 5; ++k) {
        const double exact = static_cast<double>(k * k) * pi2;
        for (std::size_t l = 0; l + 1 < rs.size(); ++l) {
            const double e0 = std::abs(rs[l].eigenvalues[k - 1] - exact);
            const double e1 = std::abs(rs[l + 1].eigenvalues[k - 1] - exact);
            EXPECT_GE(e0 / e1, 3.5) << "k=" << k << " level " << l;
        }
    }
}

TEST(SpSpectrum, ResultInvariants) {
    const std::vector<std::pair<BoundarySpec, PotentialSpec>> cases = {
        {BoundarySpec::dirichlet(), DeltaPotential{0.5, -10.0}},
        {BoundarySpec::free(), sampled_from_function(60, [](double x) { return 10.0 * x; })},
        {BoundarySpec::quasi_periodic(0.4), HMinusOnePotential{2.0, Vector(60, 0.5)}},
        {BoundarySpec::line(1.0, -3.0), NoPotential{}},
    };
    for (const auto& [bc, v] : cases) {
        const GridBasis g(60, bc);
        const SymMatrix k = assemble_stiffness(g), p = assemble_potential(g, v), m = assemble_overlap(g);
        const auto r = solve_sp_eig(k, p, m, 8);
        const SymMatrix a = add_symmetric(k, p);
        for (std::size_t i = 0; i < 8; ++i) {
            if (i > 0) EXPECT_LE(r.eigenvalues[i - 1], r.eigenvalues[i]);
            Vector res = a.multiply(r.eigenvectors[i]);
            axpy(-r.eigenvalues[i], m.multiply(r.eigenvectors[i]), res);
            const double bound = 1e-8 * (a.norm1() + std::abs(r.eigenvalues[i]) * m.norm1());
            EXPECT_LE(norm2(res), bound) << bc.name();
            EXPECT_LE(r.residuals[i], bound);
            for (std::size_t j = 0; j < 8; ++j)
                EXPECT_NEAR(dot(r.eigenvectors[i], m.multiply(r.eigenvectors[j])), i == j ? 1.0 : 0.0, 1e-10);
        }
    }
}

TEST(SpSpectrum, IterativePathAgreesWithDense) {
    const GridBasis g(900, BoundarySpec::quasi_periodic(-0.6));
    const SymMatrix k = assemble_stiffness(g), p = assemble_potential(g, DeltaPotential{0.2, 3.0}),
                    m = assemble_overlap(g);
    const auto dense = solve_sp_eig(k, p, m, 4);
    SpSolverOptions opt;
    opt.dense_limit = 100;
    const auto it = solve_sp_eig(k, p, m, 4, opt);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(it.eigenvalues[i], dense.eigenvalues[i], 1e-8 * dense.eigenvalues[i]);
}

TEST(SpSpectrum, DomainMonotonicityAtFixedGrid) {
    for (const PotentialSpec& v : std::vector<PotentialSpec>{NoPotential{}, DeltaPotential{0.5, -10.0},
                                                             sampled_from_function(50, [](double x) { return 10 * x; })}) {
        const double free = solve(50, BoundarySpec::free(), v, 1).eigenvalues[0];
        const double left = solve(50, BoundarySpec::dirichlet_left(), v, 1).eigenvalues[0];
        const double both = solve(50, BoundarySpec::dirichlet(), v, 1).eigenvalues[0];
        EXPECT_LE(free, left);
        EXPECT_LE(left, both);
    }
}

TEST(SpSpectrum, RejectsIndefiniteOverlap) {
    const GridBasis g(8, BoundarySpec::dirichlet());
    SymMatrix m = assemble_overlap(g);
    m.set(2, 2, -1.0);
    EXPECT_THROW(solve_sp_eig(assemble_stiffness(g), g.empty_matrix(), m, 2), IndefiniteMatrix);
    EXPECT_THROW(solve_sp_eig(g, NoPotential{}, 0), InvalidArgument);
    EXPECT_THROW(solve_sp_eig(g, NoPotential{}, 8), InvalidArgument);
}

TEST(SpSpectrum, GapReportPeriodicPattern) {
    const auto rep = gap_report(with_values({0.0, 4 * pi2, 4 * pi2, 16 * pi2, 16 * pi2}), BoundarySpec::quasi_periodic(1.0));
    ASSERT_EQ(rep.entries.size(), 4u);
    EXPECT_EQ(rep.entries[0].verdict, GapVerdict::Strict);
    EXPECT_EQ(rep.entries[1].verdict, GapVerdict::Degenerate);
    EXPECT_EQ(rep.entries[2].verdict, GapVerdict::Strict);
    EXPECT_EQ(rep.entries[3].verdict, GapVerdict::Degenerate);
    EXPECT_FALSE(rep.has_violation());
}

TEST(SpSpectrum, GapReportAntiPeriodicPattern) {
    const auto rep = gap_report(with_values({pi2, pi2, 9 * pi2, 9 * pi2}), BoundarySpec::quasi_periodic(-1.0));
    EXPECT_EQ(rep.entries[0].verdict, GapVerdict::Degenerate);
    EXPECT_EQ(rep.entries[1].verdict, GapVerdict::Strict);
    EXPECT_EQ(rep.entries[2].verdict, GapVerdict::Degenerate);
    EXPECT_FALSE(rep.has_violation());
}

TEST(SpSpectrum, GapReportDirichletAllStrict) {
    const auto rep = gap_report(with_values({pi2, 4 * pi2, 9 * pi2, 16 * pi2}), BoundarySpec::dirichlet());
    for (const auto& e : rep.entries) EXPECT_EQ(e.verdict, GapVerdict::Strict);
    const auto bad = gap_report(with_values({pi2, pi2, 9 * pi2}), BoundarySpec::dirichlet());
    EXPECT_EQ(bad.entries[0].verdict, GapVerdict::Violation);
    EXPECT_TRUE(bad.has_violation());
    EXPECT_THROW(gap_report(with_values({1.0}), BoundarySpec::dirichlet()), InvalidArgument);
}

TEST(SpSpectrum, GapVerdictsRecomputableFromFields) {
    const auto r = solve(80, BoundarySpec::quasi_periodic(1.0), DeltaPotential{0.5, -10.0}, 7);
    const auto rep = gap_report(r, BoundarySpec::quasi_periodic(1.0));
    for (const auto& e : rep.entries) {
        EXPECT_EQ(e.gap, e.upper - e.lower);
        EXPECT_EQ(e.threshold, rep.tolerance * std::max({1.0, std::abs(e.lower), std::abs(e.upper)}));
        const GapVerdict expect =
            e.gap > e.threshold ? GapVerdict::Strict : (e.asserted_strict ? GapVerdict::Violation : GapVerdict::Degenerate);
        EXPECT_EQ(e.verdict, expect);
        EXPECT_EQ(e.asserted_strict, e.lower_index % 2 == 1);
    }
}

TEST(SpSpectrum, RefinedGapReportOnPeriodicWell) {
    const BoundarySpec bc = BoundarySpec::quasi_periodic(1.0);
    const auto coarse = solve(40, bc, DeltaPotential{0.5, -10.0}, 7);
    const auto fine = solve(80, bc, DeltaPotential{0.5, -10.0}, 7);
    const auto rep = gap_report_refined(coarse, fine, bc);
    EXPECT_FALSE(rep.has_violation());
    for (const auto& e : rep.entries)
        if (e.lower_index % 2 == 1) EXPECT_EQ(e.verdict, GapVerdict::Strict) << e.lower_index;
}

TEST(SpSpectrum, GapLawSelection) {
    EXPECT_TRUE(gap_law_asserts(BoundarySpec::quasi_periodic(2.0), 1));
    EXPECT_FALSE(gap_law_asserts(BoundarySpec::quasi_periodic(2.0), 2));
    EXPECT_FALSE(gap_law_asserts(BoundarySpec::quasi_periodic(-2.0), 1));
    EXPECT_TRUE(gap_law_asserts(BoundarySpec::quasi_periodic(-2.0), 2));
    EXPECT_TRUE(gap_law_asserts(BoundarySpec::free(), 2));
    EXPECT_EQ(to_string(GapVerdict::Degenerate), "degenerate-within-tolerance");
}
