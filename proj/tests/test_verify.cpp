#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fermigate/verify.hpp"

using namespace fermigate;

namespace {

constexpr double pi2 = std::numbers::pi * std::numbers::pi;

const Check* find_check(const VerificationReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace

TEST(Verify, LocalNondegeneracyWithContact) {
    Scenario s{.name = "well+contact",
               .kind = ScenarioKind::NondegeneracyLocal,
               .v = PotentialInput{DeltaPotential{0.5, -10.0}},
               .w = InteractionInput{DeltaContact{5.0}},
               .n_particles = 2,
               .grids = {40, 80}};
    const auto r = run_scenario(s);
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_FALSE(r.checks.empty());
    EXPECT_TRUE(r.overall());
    EXPECT_EQ(r.expected, "pass");
}

TEST(Verify, FreePeriodicPairIsNegativeControl) {
    Scenario s{.name = "periodic-control",
               .kind = ScenarioKind::NondegeneracyNonlocal,
               .bc = BoundarySpec::quasi_periodic(1.0),
               .n_particles = 2,
               .grids = {20, 40}};
    s.expected = parity_expectation(s.bc, s.n_particles);
    EXPECT_EQ(s.expected, Expectation::NegativeControl);
    const auto r = run_scenario(s);
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_TRUE(r.overall());
    EXPECT_EQ(r.expected, "negative-control");
}

TEST(Verify, AntiPeriodicGapPattern) {
    Scenario s{.name = "ap-gaps",
               .kind = ScenarioKind::SingleParticleGaps,
               .bc = BoundarySpec::quasi_periodic(-1.0),
               .grids = {200, 400},
               .k = 5};
    const auto r = run_scenario(s);
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_TRUE(r.overall());
    EXPECT_FALSE(r.checks.empty());
}

TEST(Verify, SlaterSumFreePair) {
    const auto r = slater_sum_oracle(NoPotential{}, BoundarySpec::dirichlet(), 2, 6, 30);
    const Check* c = find_check(r, "max_rel_deviation");
    ASSERT_NE(c, nullptr);
    EXPECT_TRUE(c->passed);
    EXPECT_LE(c->measured, 1e-8);
    // λ₁ ≈ π² + 4π²
    const Check* l1 = find_check(r, "lambda1");
    ASSERT_NE(l1, nullptr);
    EXPECT_NEAR(l1->measured / (5 * pi2), 1.0, 2e-2);
}

TEST(Verify, SlaterSumTripleWithBump) {
    const auto r = slater_sum_oracle(DeltaPotential{0.3, 4.0}, BoundarySpec::dirichlet(), 3, 4, 16);
    EXPECT_TRUE(r.overall());
    EXPECT_LE(find_check(r, "max_rel_deviation")->measured, 1e-8);
}

TEST(Verify, SlaterSumSingleParticleCoincides) {
    const GridBasis g(25, BoundarySpec::quasi_periodic(0.5));
    const auto r = slater_sum_oracle(DeltaPotential{0.3, 4.0}, g.bc(), 1, 5, 25);
    EXPECT_TRUE(r.overall());
    const auto sp = solve_sp_eig(g, DeltaPotential{0.3, 4.0}, 5);
    for (std::size_t i = 0; i < 5; ++i)
        EXPECT_NEAR(find_check(r, "lambda" + std::to_string(i + 1))->measured, sp.eigenvalues[i],
                    1e-9 * std::max(1.0, sp.eigenvalues[i]));
}

TEST(Verify, MonotonicitySingleParticle) {
    const auto r = monotonicity_suite(PotentialInput{}, InteractionInput{}, 1,
                                      {BoundarySpec::free(), BoundarySpec::dirichlet()}, {40, 80});
    EXPECT_TRUE(r.overall());
    const Check* f = find_check(r, "lambda1[" + describe(BoundarySpec::free()) + "]");
    const Check* d = find_check(r, "lambda1[" + describe(BoundarySpec::dirichlet()) + "]");
    ASSERT_NE(f, nullptr);
    ASSERT_NE(d, nullptr);
    EXPECT_LE(std::abs(f->measured), 1e-8);
    EXPECT_NEAR(d->measured / pi2, 1.0, 2e-3);
}

TEST(Verify, MonotonicityPairChainWithContact) {
    const std::vector<BoundarySpec> chain{BoundarySpec::free(), BoundarySpec::dirichlet_left(),
                                          BoundarySpec::dirichlet()};
    for (const InteractionInput& w : {InteractionInput{}, InteractionInput{DeltaContact{5.0}}}) {
        const auto r = monotonicity_suite(PotentialInput{}, w, 2, chain, {20, 40});
        EXPECT_TRUE(r.overall()) << w.describe();
        EXPECT_EQ(r.checks.size(), 3u + 2u * 2u);
    }
    EXPECT_THROW(monotonicity_suite(PotentialInput{}, InteractionInput{}, 2, {BoundarySpec::free()}, {20, 40}),
                 InvalidArgument);
}

TEST(Verify, ReportsAreDeterministic) {
    const auto s = find_scenario("structural/N2");
    ASSERT_TRUE(s.has_value());
    const auto a = run_scenario(*s);
    const auto b = run_scenario(*s);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(a.overall()) << a.error;
}

TEST(Verify, FailuresBecomeReportErrors) {
    Scenario s{.name = "broken", .kind = ScenarioKind::NeumannTrace, .bc = BoundarySpec::free(), .grids = {20, 40}};
    VerificationReport r;
    EXPECT_NO_THROW(r = run_scenario(s));
    EXPECT_FALSE(r.error.empty());
    EXPECT_FALSE(r.overall());
    EXPECT_FALSE(r.no_checks());

    Scenario bad_grid{.name = "grid", .kind = ScenarioKind::NondegeneracyLocal, .n_particles = 2, .grids = {20, 30}};
    EXPECT_FALSE(run_scenario(bad_grid).overall());
}

TEST(Verify, ParityExpectation) {
    EXPECT_EQ(parity_expectation(BoundarySpec::quasi_periodic(1.0), 3), Expectation::Pass);
    EXPECT_EQ(parity_expectation(BoundarySpec::quasi_periodic(1.0), 2), Expectation::NegativeControl);
    EXPECT_EQ(parity_expectation(BoundarySpec::quasi_periodic(-1.0), 2), Expectation::Pass);
    EXPECT_EQ(parity_expectation(BoundarySpec::quasi_periodic(-1.0), 3), Expectation::NegativeControl);
    EXPECT_EQ(parity_expectation(BoundarySpec::line(2.0, -1.0), 2), Expectation::Pass);
    EXPECT_THROW(parity_expectation(BoundarySpec::line(1.0, 0.0), 2), InvalidArgument);
}

TEST(Verify, ChecksRoundAndCompare) {
    EXPECT_TRUE(make_check("a", 1.0, 1.0, Comparison::LessEqual).passed);
    EXPECT_FALSE(make_check("a", 1.0, 1.0, Comparison::Less).passed);
    EXPECT_TRUE(make_check("a", 2.0, 1.0, Comparison::Greater).passed);
    EXPECT_TRUE(make_check("a", 1e300, 0.0, Comparison::Record).passed);
    // values differing past the twelfth digit compare equal
    EXPECT_TRUE(make_check("a", 1.0 + 1e-14, 1.0, Comparison::LessEqual).passed);
    EXPECT_EQ(round12(0.1234567890123456), 0.123456789012);
    EXPECT_EQ(format12(round12(std::numbers::pi)), format12(std::numbers::pi));
    VerificationReport empty;
    EXPECT_TRUE(empty.overall());
    EXPECT_TRUE(empty.no_checks());
}

TEST(Verify, ManifestIsWellFormed) {
    const auto m = default_manifest();
    std::set<std::string> names;
    std::set<std::string> kinds;
    for (const auto& s : m) {
        EXPECT_TRUE(names.insert(s.name).second) << s.name;
        kinds.insert(to_string(s.kind));
        EXPECT_LT(s.grids.first, s.grids.second) << s.name;
        EXPECT_EQ(scenario_kind_from_string(to_string(s.kind)), s.kind);
        if (s.kind == ScenarioKind::NondegeneracyNonlocal)
            EXPECT_EQ(s.expected, parity_expectation(s.bc, s.n_particles)) << s.name;
    }
    EXPECT_EQ(kinds.size(), scenario_kind_names.size());
    EXPECT_FALSE(find_scenario("no/such/scenario").has_value());
}
