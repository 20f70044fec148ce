#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/manybody.hpp"
#include "fermigate/mb_spectrum.hpp"
#include "fermigate/neumann.hpp"
#include "fermigate/parallel.hpp"
#include "fermigate/simplex.hpp"
#include "fermigate/slater_basis.hpp"
#include "fermigate/sp_spectrum.hpp"
#include "fermigate/wavefunction.hpp"

namespace fermigate {

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Shortest "%.12g" text of x; non-finite values spell "nan", "inf", "-inf".
inline std::string format12(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// x rounded to 12 significant digits, so that printing and re-reading is exact.
inline double round12(double x) {
    if (!std::isfinite(x)) return x;
    return std::strtod(format12(x).c_str(), nullptr);
}

// ---------------------------------------------------------------------------
// Problem inputs that depend on the grid
// ---------------------------------------------------------------------------

/// A potential, either fixed or a named profile resampled on every grid.
/// Profiles: "ramp" → v(x) = scale · x.
struct PotentialInput {
    PotentialSpec spec = NoPotential{};
    std::string profile;
    double scale = 10.0;

    [[nodiscard]] PotentialSpec on_grid(std::size_t n_cells) const {
        if (profile.empty()) {
            if (const auto* s = std::get_if<SampledPotential>(&spec))
                require(s->values.size() == n_cells + 1, "sampled potential has " + std::to_string(s->values.size()) +
                                                             " values but the grid has " +
                                                             std::to_string(n_cells + 1) + " nodes");
            if (const auto* s = std::get_if<HMinusOnePotential>(&spec))
                require(s->cell_values.size() == n_cells, "H^-1 potential cell count does not match the grid");
            return spec;
        }
        if (profile == "ramp") {
            const double c = scale;
            return sampled_from_function(n_cells, [c](double x) { return c * x; });
        }
        throw InvalidArgument("unknown potential profile '" + profile + "'");
    }

    [[nodiscard]] bool is_free() const { return profile.empty() && std::holds_alternative<NoPotential>(spec); }

    [[nodiscard]] std::string describe() const {
        if (!profile.empty()) return "sampled(" + profile + ", scale=" + format12(scale) + ")";
        return std::visit(
            [](const auto& p) -> std::string {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, NoPotential>)
                    return "none";
                else if constexpr (std::is_same_v<T, DeltaPotential>)
                    return "delta(x0=" + format12(p.x0) + ", strength=" + format12(p.strength) + ")";
                else if constexpr (std::is_same_v<T, SampledPotential>)
                    return "sampled(" + std::to_string(p.values.size()) + " nodes)";
                else
                    return "h-minus-one(alpha=" + format12(p.alpha) + ", " + std::to_string(p.cell_values.size()) +
                           " cells)";
            },
            spec);
    }
};

/// An interaction, fixed or a named kernel profile.
/// Profiles: "gaussian" → w(x, y) = scale · exp(−(x − y)² / (2 · 0.1²)).
struct InteractionInput {
    InteractionSpec spec = NoInteraction{};
    std::string profile;
    double scale = 1.0;

    [[nodiscard]] InteractionSpec on_grid(std::size_t n_cells) const {
        if (profile.empty()) {
            validate_interaction(spec, n_cells + 1);
            return spec;
        }
        if (profile == "gaussian") {
            const double c = scale;
            return sampled_kernel_from_function(n_cells, [c](double x, double y) {
                const double d = x - y;
                return c * std::exp(-d * d / 0.02);
            });
        }
        throw InvalidArgument("unknown interaction profile '" + profile + "'");
    }

    [[nodiscard]] std::string describe() const {
        if (!profile.empty()) return "kernel(" + profile + ", scale=" + format12(scale) + ")";
        if (std::holds_alternative<NoInteraction>(spec)) return "none";
        if (const auto* d = std::get_if<DeltaContact>(&spec)) return "delta-contact(g=" + format12(d->g) + ")";
        return "kernel(" + std::to_string(std::get<SampledKernel>(spec).values.rows()) + " nodes)";
    }
};

inline std::string describe(const BoundarySpec& bc) {
    switch (bc.kind) {
        case BoundarySpec::Kind::QuasiPeriodic: return "quasiperiodic(alpha=" + format12(bc.alpha) + ")";
        case BoundarySpec::Kind::Line: return "line(a=" + format12(bc.a) + ", b=" + format12(bc.b) + ")";
        default: return bc.name();
    }
}

// ---------------------------------------------------------------------------
// Scenarios and reports
// ---------------------------------------------------------------------------

enum class ScenarioKind {
    FreeSpectrum,
    SingleParticleGaps,
    SlaterSum,
    SlaterCondon,
    NondegeneracyLocal,
    NondegeneracyNonlocal,
    Positivity,
    Monotonicity,
    NeumannTrace,
    Structural,
};

inline constexpr std::array<std::pair<ScenarioKind, const char*>, 10> scenario_kind_names{{
    {ScenarioKind::FreeSpectrum, "free_spectrum"},
    {ScenarioKind::SingleParticleGaps, "single_particle_gaps"},
    {ScenarioKind::SlaterSum, "slater_sum"},
    {ScenarioKind::SlaterCondon, "slater_condon"},
    {ScenarioKind::NondegeneracyLocal, "nondegeneracy_local"},
    {ScenarioKind::NondegeneracyNonlocal, "nondegeneracy_nonlocal"},
    {ScenarioKind::Positivity, "positivity"},
    {ScenarioKind::Monotonicity, "monotonicity"},
    {ScenarioKind::NeumannTrace, "neumann_trace"},
    {ScenarioKind::Structural, "structural"},
}};

inline std::string to_string(ScenarioKind k) {
    for (const auto& [kind, name] : scenario_kind_names)
        if (kind == k) return name;
    return "unknown";
}

inline std::optional<ScenarioKind> scenario_kind_from_string(const std::string& s) {
    for (const auto& [kind, name] : scenario_kind_names)
        if (s == name) return kind;
    return std::nullopt;
}

/// Report section (topic) of a scenario kind.
inline std::string section_of(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::FreeSpectrum: return "single-particle-spectrum";
        case ScenarioKind::SingleParticleGaps: return "gap-law";
        case ScenarioKind::SlaterSum: return "slater-sum";
        case ScenarioKind::SlaterCondon: return "slater-condon";
        case ScenarioKind::NondegeneracyLocal: return "ground-state-nondegeneracy";
        case ScenarioKind::NondegeneracyNonlocal: return "parity-condition";
        case ScenarioKind::Positivity: return "simplex-positivity";
        case ScenarioKind::Monotonicity: return "dirichlet-monotonicity";
        case ScenarioKind::NeumannTrace: return "neumann-trace";
        case ScenarioKind::Structural: return "structural-invariants";
    }
    return "other";
}

enum class Expectation { Pass, NegativeControl };

inline std::string to_string(Expectation e) { return e == Expectation::Pass ? "pass" : "negative-control"; }

/// Nonlocal boundary conditions give a simple ground state when α(−1)^{N−1} > 0.
inline Expectation parity_expectation(const BoundarySpec& bc, std::size_t n_particles) {
    double alpha = 1.0;
    if (bc.kind == BoundarySpec::Kind::QuasiPeriodic) alpha = bc.alpha;
    if (bc.kind == BoundarySpec::Kind::Line) {
        require(bc.b != 0.0, "parity rule needs a coupled line boundary (b ≠ 0)");
        alpha = bc.a / bc.b;
    }
    const double sign = (n_particles % 2 == 1) ? 1.0 : -1.0;
    return alpha * sign > 0.0 ? Expectation::Pass : Expectation::NegativeControl;
}

struct Scenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::FreeSpectrum;
    PotentialInput v;
    InteractionInput w;
    BoundarySpec bc = BoundarySpec::dirichlet();
    std::size_t n_particles = 1;
    std::pair<std::size_t, std::size_t> grids{40, 80};
    std::size_t k = 6;
    Expectation expected = Expectation::Pass;
    std::uint64_t seed = 0;
    std::string state = "ground";  // positivity: "ground" or "first-excited"
    std::map<std::string, double> tolerances;  // overrides of default_tolerances(kind)
    MbSolverOptions solver;
};

/// Named tolerances every check of a kind refers to.
inline std::map<std::string, double> default_tolerances(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::FreeSpectrum: return {{"rel_err", 2e-3}, {"zero_abs", 1e-6}};
        case ScenarioKind::SingleParticleGaps: return {{"gap_floor_rel", 1e-6}};
        case ScenarioKind::SlaterSum: return {{"rel_dev", 1e-8}};
        case ScenarioKind::SlaterCondon: return {{"max_abs_dev", 1e-10}};
        case ScenarioKind::NondegeneracyLocal:
        case ScenarioKind::NondegeneracyNonlocal:
            return {{"margin_factor", 4.0}, {"ratio_max", 0.5}, {"gap_floor_rel", 1e-6}};
        case ScenarioKind::Positivity: return {{"eps_pos", 1e-6}, {"consistency_min", 0.999}, {"control_max", 0.99}};
        case ScenarioKind::Monotonicity: return {{"margin_factor", 4.0}, {"coarse_margin_min", 0.5}};
        case ScenarioKind::NeumannTrace: return {{"rel_agreement", 0.02}, {"extension_abs", 1e-10}};
        case ScenarioKind::Structural:
            return {{"isometry_rel", 1e-12},
                    {"identity_rel", 1e-12},
                    {"tessellation_points", 1e5},
                    {"volume_sigma", 3.0},
                    {"density_abs", 1e-10},
                    {"pair_density_abs", 1e-8},
                    {"antisymmetry_abs", 1e-12},
                    {"pullback_rel", 1e-10}};
    }
    return {};
}

enum class Comparison { LessEqual, Less, GreaterEqual, Greater, Record };

inline std::string to_string(Comparison c) {
    switch (c) {
        case Comparison::LessEqual: return "<=";
        case Comparison::Less: return "<";
        case Comparison::GreaterEqual: return ">=";
        case Comparison::Greater: return ">";
        case Comparison::Record: return "record";
    }
    return "?";
}

inline std::optional<Comparison> comparison_from_string(const std::string& s) {
    for (Comparison c : {Comparison::LessEqual, Comparison::Less, Comparison::GreaterEqual, Comparison::Greater,
                         Comparison::Record})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

/// One named assertion. Record checks carry a measurement and always pass.
struct Check {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    Comparison comparison = Comparison::LessEqual;
    bool passed = false;
    std::string note;

    friend bool operator==(const Check& a, const Check& b) {
        auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
        return a.name == b.name && same(a.measured, b.measured) && same(a.threshold, b.threshold) &&
               a.comparison == b.comparison && a.passed == b.passed && a.note == b.note;
    }
};

/// Builds a check on values rounded to 12 significant digits.
inline Check make_check(std::string name, double measured, double threshold, Comparison cmp, std::string note = {}) {
    Check c{std::move(name), round12(measured), round12(threshold), cmp, false, std::move(note)};
    switch (cmp) {
        case Comparison::LessEqual: c.passed = c.measured <= c.threshold; break;
        case Comparison::Less: c.passed = c.measured < c.threshold; break;
        case Comparison::GreaterEqual: c.passed = c.measured >= c.threshold; break;
        case Comparison::Greater: c.passed = c.measured > c.threshold; break;
        case Comparison::Record: c.passed = true; break;
    }
    return c;
}

struct VerificationReport {
    std::string scenario;
    std::string kind;
    std::string section;
    std::string expected = "pass";
    std::vector<Check> checks;
    std::vector<std::pair<std::string, std::string>> environment;
    std::string error;  // solver or input failure; the report then fails

    /// Conjunction of the check verdicts; vacuously true without checks.
    [[nodiscard]] bool overall() const {
        if (!error.empty()) return false;
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    [[nodiscard]] bool no_checks() const { return checks.empty() && error.empty(); }

    void add(Check c) { checks.push_back(std::move(c)); }
    void env(std::string key, std::string value) { environment.emplace_back(std::move(key), std::move(value)); }
    void env(std::string key, double value) { env(std::move(key), format12(value)); }

    friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

// ---------------------------------------------------------------------------
// Helpers shared by the runners
// ---------------------------------------------------------------------------

namespace detail {

inline double tolerance(const Scenario& s, const std::string& name) {
    if (const auto it = s.tolerances.find(name); it != s.tolerances.end()) return it->second;
    const auto d = default_tolerances(s.kind);
    const auto it = d.find(name);
    require(it != d.end(), "scenario kind " + to_string(s.kind) + " has no tolerance '" + name + "'");
    return it->second;
}

inline void require_grids(const Scenario& s) {
    require(s.grids.first >= 4, "grid must have at least 4 cells");
    require(s.grids.second == 2 * s.grids.first, "grids must be (n, 2n)");
}

inline void describe_problem(const Scenario& s, VerificationReport& r) {
    r.env("potential", s.v.describe());
    r.env("interaction", s.w.describe());
    r.env("boundary", describe(s.bc));
    r.env("n_particles", static_cast<double>(s.n_particles));
    r.env("grid_coarse", static_cast<double>(s.grids.first));
    r.env("grid_fine", static_cast<double>(s.grids.second));
    r.env("seed", std::to_string(s.seed));
    for (const auto& [name, value] : default_tolerances(s.kind)) r.env("tol." + name, tolerance(s, name));
    r.env("solver.dense_limit", static_cast<double>(s.solver.dense_limit));
    r.env("solver.target_rel_tol", s.solver.target_rel_tol);
    r.env("solver.accept_rel_tol", s.solver.accept_rel_tol);
}

inline double rel_dev(double x, double ref) { return std::abs(x - ref) / std::max(1.0, std::abs(ref)); }

/// Analytic free single-particle eigenvalues (1-based k) for the boundary conditions with closed forms.
inline double free_eigenvalue(const BoundarySpec& bc, std::size_t k) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double kk = static_cast<double>(k);
    switch (bc.kind) {
        case BoundarySpec::Kind::DirichletBoth: return kk * kk * pi2;
        case BoundarySpec::Kind::Free: return (kk - 1) * (kk - 1) * pi2;
        case BoundarySpec::Kind::DirichletLeft:
        case BoundarySpec::Kind::DirichletRight: return (kk - 0.5) * (kk - 0.5) * pi2;
        case BoundarySpec::Kind::QuasiPeriodic:
            if (bc.alpha == 1.0) {
                const double j = static_cast<double>(k / 2);  // 0, 1, 1, 2, 2, ...
                return 4.0 * j * j * pi2;
            }
            if (bc.alpha == -1.0) {
                const double j = static_cast<double>(2 * ((k - 1) / 2) + 1);  // 1, 1, 3, 3, ...
                return j * j * pi2;
            }
            break;
        default: break;
    }
    throw InvalidArgument("no closed-form free spectrum for boundary " + describe(bc));
}

/// Ψ on the node grid with the largest-magnitude value made positive.
inline NodalTensor sign_fixed(NodalTensor t) {
    double ref = 0.0;
    for (double v : t.data())
        if (std::abs(v) > std::abs(ref)) ref = v;
    if (ref < 0.0)
        for (double& v : t.data()) v = -v;
    return t;
}

inline NodalTensor single_particle_tensor(const GridBasis& grid, std::span<const double> coeffs) {
    NodalTensor t(1, grid.node_count());
    t.data() = grid.nodal_values(coeffs);
    return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Oracles and suites
// ---------------------------------------------------------------------------

/// Lowest k many-body eigenvalues against sorted N-sums of single-particle
/// eigenvalues from the same matrices (no interaction).
inline VerificationReport slater_sum_oracle(const PotentialSpec& v, const BoundarySpec& bc, std::size_t n_particles,
                                            std::size_t k, std::size_t n_cells, double rel_tol = 1e-8,
                                            MbSolverOptions opts = {}) {
    VerificationReport r;
    r.kind = to_string(ScenarioKind::SlaterSum);
    r.section = section_of(ScenarioKind::SlaterSum);
    const GridBasis grid(n_cells, bc);
    const ManyBodyOperator h = assemble_manybody(cholesky_orbitals(grid), v, NoInteraction{}, n_particles);
    require(k >= 1 && k <= h.dim(), "slater_sum_oracle: k out of range");
    const SpectralResult mb = solve_mb_eig(h, k, opts);
    const SpectralResult sp = solve_sp_eig(grid, v, grid.dim());

    std::vector<double> sums(h.basis().size());
    for (std::size_t j = 0; j < sums.size(); ++j) {
        double s = 0.0;
        for (auto o : h.basis().tuple(j)) s += sp.eigenvalues[o];
        sums[j] = s;
    }
    std::partial_sort(sums.begin(), sums.begin() + static_cast<std::ptrdiff_t>(k), sums.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = detail::rel_dev(mb.eigenvalues[i], sums[i]);
        worst = std::max(worst, d);
        r.add(make_check("lambda" + std::to_string(i + 1), mb.eigenvalues[i], sums[i], Comparison::Record,
                         "many-body eigenvalue vs orbital sum"));
    }
    r.add(make_check("max_rel_deviation", worst, rel_tol, Comparison::LessEqual));
    r.env("many_body_dim", static_cast<double>(h.dim()));
    return r;
}

/// λ₁ along a chain of nested product-type Dirichlet sets, each step strictly
/// increasing with a margin above both the coarse floor and 4× the estimate.
inline VerificationReport monotonicity_suite(const PotentialInput& v, const InteractionInput& w,
                                             std::size_t n_particles, const std::vector<BoundarySpec>& chain,
                                             std::pair<std::size_t, std::size_t> grids, double margin_factor = 4.0,
                                             double coarse_margin_min = 0.5, MbSolverOptions opts = {}) {
    require(chain.size() >= 2, "monotonicity needs at least two boundary conditions");
    VerificationReport r;
    r.kind = to_string(ScenarioKind::Monotonicity);
    r.section = section_of(ScenarioKind::Monotonicity);
    struct Level {
        double coarse, fine, estimate;
    };
    std::vector<Level> levels;
    for (const auto& bc : chain) {
        auto ground = [&](std::size_t n) {
            return solve_problem(v.on_grid(n), w.on_grid(n), bc, n_particles, n, 1, opts).second.eigenvalues[0];
        };
        const double c = ground(grids.first);
        const double f = ground(grids.second);
        levels.push_back({c, f, std::abs(c - f)});
        r.add(make_check("lambda1[" + describe(bc) + "]", f, std::abs(c - f), Comparison::Record,
                         "fine-grid value; threshold column holds the discretization estimate"));
    }
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const std::string tag = describe(chain[i]) + "->" + describe(chain[i + 1]);
        const double est = std::max(levels[i].estimate, levels[i + 1].estimate);
        r.add(make_check("coarse_margin[" + tag + "]", levels[i + 1].coarse - levels[i].coarse, coarse_margin_min,
                         Comparison::GreaterEqual));
        r.add(make_check("fine_margin[" + tag + "]", levels[i + 1].fine - levels[i].fine, margin_factor * est,
                         Comparison::Greater));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Scenario runners
// ---------------------------------------------------------------------------

namespace detail {

inline void run_free_spectrum(const Scenario& s, VerificationReport& r) {
    require(s.v.is_free(), "free_spectrum needs v = none");
    const GridBasis grid(s.grids.first, s.bc);
    const SpectralResult sp = solve_sp_eig(grid, NoPotential{}, s.k);
    for (std::size_t i = 0; i < s.k; ++i) {
        const double ref = free_eigenvalue(s.bc, i + 1);
        const std::string name = "lambda" + std::to_string(i + 1);
        if (ref == 0.0)
            r.add(make_check(name + ".abs_err", std::abs(sp.eigenvalues[i]), tolerance(s, "zero_abs"),
                             Comparison::LessEqual, "reference 0"));
        else
            r.add(make_check(name + ".rel_err", std::abs(sp.eigenvalues[i] - ref) / ref, tolerance(s, "rel_err"),
                             Comparison::LessEqual, "reference " + format12(ref)));
    }
}

inline void run_gaps(const Scenario& s, VerificationReport& r) {
    require_grids(s);
    const std::size_t count = 2 * s.k + 1;  // pairs i = 1..2k
    auto solve = [&](std::size_t n) {
        const GridBasis grid(n, s.bc);
        return solve_sp_eig(grid, s.v.on_grid(n), count);
    };
    const GapReport g = gap_report_refined(solve(s.grids.first), solve(s.grids.second), s.bc,
                                           tolerance(s, "gap_floor_rel"));
    const bool symmetric_free = s.v.is_free() && s.bc.kind == BoundarySpec::Kind::QuasiPeriodic &&
                                std::abs(s.bc.alpha) == 1.0;
    for (const GapEntry& e : g.entries) {
        const std::string pair = "gap" + std::to_string(e.lower_index) + "_" + std::to_string(e.lower_index + 1);
        if (e.asserted_strict)
            r.add(make_check(pair + ".strict", e.gap, e.threshold, Comparison::Greater, "asserted by the gap law"));
        else if (symmetric_free)
            r.add(make_check(pair + ".degenerate", e.gap, e.threshold, Comparison::LessEqual,
                             "free (anti)periodic double eigenvalue"));
        else
            r.add(make_check(pair + ".measured", e.gap, e.threshold, Comparison::Record, to_string(e.verdict)));
    }
}

inline void run_slater_condon(const Scenario& s, VerificationReport& r) {
    require(s.n_particles == 2, "slater_condon compares against the N = 2 brute force");
    const std::size_t n = s.grids.first;
    const GridBasis grid(n, s.bc);
    const PotentialSpec v = s.v.on_grid(n);
    const InteractionSpec w = s.w.on_grid(n);
    const ManyBodyOperator a = assemble_manybody(cholesky_orbitals(grid), v, w, 2);
    const ManyBodyOperator b = assemble_manybody_bruteforce(v, w, grid, 2);
    require(a.dim() == b.dim(), "brute-force and Slater–Condon dimensions differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j <= i; ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
    r.env("n_orbitals", static_cast<double>(grid.dim()));
    r.add(make_check("max_abs_deviation", worst, tolerance(s, "max_abs_dev"), Comparison::LessEqual));
}

inline void run_nondegeneracy(const Scenario& s, VerificationReport& r) {
    require_grids(s);
    auto level = [&](std::size_t n) {
        const auto [h, sr] = solve_problem(s.v.on_grid(n), s.w.on_grid(n), s.bc, s.n_particles, n, 2, s.solver);
        require(sr.eigenvalues.size() >= 2, "degeneracy classification needs at least two states");
        return DegeneracyLevel{n, sr.eigenvalues[0], sr.eigenvalues[1], 0.0};
    };
    const DegeneracyReport d =
        degeneracy_from_levels(level(s.grids.first), level(s.grids.second), tolerance(s, "gap_floor_rel"));
    const double margin = tolerance(s, "margin_factor") * d.discretization_error_estimate;
    r.add(make_check("lambda1_fine", d.fine.lambda1, d.coarse.lambda1, Comparison::Record,
                     "threshold column holds the coarse value"));
    r.add(make_check("gap_coarse", d.coarse.gap, 0.0, Comparison::Record));
    r.env("verdict", to_string(d.verdict));
    if (s.expected == Expectation::Pass) {
        r.add(make_check("gap_fine_vs_margin", d.fine.gap, margin, Comparison::Greater, "non-degenerate"));
        r.add(make_check("refinement_ratio", d.refinement_ratio, 0.0, Comparison::Record));
    } else {
        r.add(make_check("gap_fine_vs_margin", d.fine.gap, margin, Comparison::LessEqual, "not separated"));
        r.add(make_check("refinement_ratio", d.refinement_ratio, tolerance(s, "ratio_max"), Comparison::LessEqual,
                         "degenerate"));
    }
}

inline void run_positivity(const Scenario& s, VerificationReport& r) {
    require(s.n_particles >= 2, "positivity needs N ≥ 2");
    require(s.state == "ground" || s.state == "first-excited", "state must be 'ground' or 'first-excited'");
    const std::size_t n = s.grids.second;
    const std::size_t which = s.state == "ground" ? 0 : 1;
    const auto [h, sr] = solve_problem(s.v.on_grid(n), s.w.on_grid(n), s.bc, s.n_particles, n, which + 1, s.solver);
    require(sr.eigenvalues.size() > which, "not enough eigenstates");
    const SimplexSample sample = restrict_to_simplex(sr.eigenvectors[which], h);
    const PositivityReport p = positivity_report(sample, tolerance(s, "eps_pos"));
    r.env("state", s.state);
    r.env("grid_used", static_cast<double>(n));
    r.add(make_check("eigenvalue", sr.eigenvalues[which], 0.0, Comparison::Record));
    r.add(make_check("excluded_fraction", p.excluded, 0.0, Comparison::Record));
    r.add(make_check("interior_nodes", static_cast<double>(p.interior), 0.0, Comparison::Record));
    if (s.expected == Expectation::Pass)
        r.add(make_check("sign_consistency", p.sign_consistency, tolerance(s, "consistency_min"),
                         Comparison::GreaterEqual));
    else
        r.add(make_check("sign_consistency", p.sign_consistency, tolerance(s, "control_max"),
                         Comparison::LessEqual, "sign change expected"));
}

inline void run_monotonicity(const Scenario& s, VerificationReport& r) {
    require_grids(s);
    const VerificationReport m =
        monotonicity_suite(s.v, s.w, s.n_particles,
                           {BoundarySpec::free(), BoundarySpec::dirichlet_left(), BoundarySpec::dirichlet()}, s.grids,
                           tolerance(s, "margin_factor"), tolerance(s, "coarse_margin_min"), s.solver);
    for (const auto& c : m.checks) r.add(c);
}

inline void run_neumann(const Scenario& s, VerificationReport& r) {
    require(s.bc.kind == BoundarySpec::Kind::DirichletBoth || s.bc.kind == BoundarySpec::Kind::DirichletLeft,
            "neumann_trace needs a Dirichlet face at x₁ = 0");
    const std::size_t n = s.grids.first;
    const PotentialSpec v = s.v.on_grid(n);
    const InteractionSpec w = s.w.on_grid(n);
    NodalTensor psi;
    double lambda = 0.0;
    if (s.n_particles == 1) {
        require(is_zero_interaction(w), "N = 1 carries no interaction");
        const GridBasis grid(n, s.bc);
        const SpectralResult sp = solve_sp_eig(grid, v, 1);
        psi = detail::single_particle_tensor(grid, sp.eigenvectors[0]);
        lambda = sp.eigenvalues[0];
    } else {
        const auto [h, sr] = solve_problem(v, w, s.bc, s.n_particles, n, 1, s.solver);
        psi = to_nodal_tensor(sr.eigenvectors[0], h);
        lambda = sr.eigenvalues[0];
    }
    psi = sign_fixed(std::move(psi));
    const std::size_t m = psi.nodes_per_axis();
    const std::vector<double> f =
        product_face_profile(s.n_particles, m, [](double x) { return std::sin(std::numbers::pi * x); });
    const Face face{0, false};
    const double weak1 = neumann_trace_weak(psi, lambda, v, w, f, face, Extension::OneCell);
    const double weak2 = neumann_trace_weak(psi, lambda, v, w, f, face, Extension::TwoCell);
    const NeumannLimit lim = neumann_trace_limit(psi, f, face);
    const double rel = tolerance(s, "rel_agreement");
    r.add(make_check("weak_one_cell", weak1, 0.0, Comparison::Record));
    r.add(make_check("limit_estimate", lim.estimate, 0.0, Comparison::Record));
    r.add(make_check("limit_fit_residual", lim.fit_residual, 0.0, Comparison::Record));
    r.add(make_check("extension_independence", std::abs(weak1 - weak2), tolerance(s, "extension_abs"),
                     Comparison::LessEqual));
    r.add(make_check("weak_vs_limit", std::abs(weak1 - lim.estimate) / std::abs(weak1), rel, Comparison::LessEqual));
    if (s.n_particles == 1 && s.v.is_free() && s.bc.kind == BoundarySpec::Kind::DirichletBoth) {
        const double ref = -std::sqrt(2.0) * std::numbers::pi;
        r.add(make_check("weak_vs_analytic", std::abs(weak1 - ref) / std::abs(ref), rel, Comparison::LessEqual,
                         "reference -sqrt(2) pi"));
        r.add(make_check("limit_vs_analytic", std::abs(lim.estimate - ref) / std::abs(ref), rel,
                         Comparison::LessEqual, "reference -sqrt(2) pi"));
    }
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline void run_structural(const Scenario& s, VerificationReport& r) {
    const std::size_t np = s.n_particles;
    require(np >= 2, "structural checks need N ≥ 2");
    const std::size_t n = s.grids.first;
    const std::size_t m = n + 1;
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // T isometry and inverse on random simplex data
    double iso_l2 = 0.0, iso_h1 = 0.0, inv_s = 0.0;
    std::vector<std::size_t> idx(np);
    for (int trial = 0; trial < 20; ++trial) {
        SimplexData sd(np, m);
        for (std::size_t i = 0; i < sd.size(); ++i) {
            sd.tuple(i, idx);
            sd.values()[i] = SimplexData::tied(idx) ? 0.0 : gauss(rng);
        }
        const NodalTensor t = extend_from_simplex(sd);
        iso_l2 = std::max(iso_l2, std::abs(discrete_l2_sq(t) - discrete_l2_sq(sd)) / discrete_l2_sq(sd));
        iso_h1 = std::max(iso_h1, std::abs(discrete_h1_sq(t) - discrete_h1_sq(sd)) / discrete_h1_sq(sd));
        const SimplexData back = restrict_to_simplex(t);
        inv_s = std::max(inv_s, max_abs_diff(back.values(), sd.values()) / max_abs(sd.values()));
    }
    r.add(make_check("isometry_l2", iso_l2, tolerance(s, "isometry_rel"), Comparison::LessEqual));
    r.add(make_check("isometry_h1", iso_h1, tolerance(s, "isometry_rel"), Comparison::LessEqual));
    r.add(make_check("restrict_after_extend", inv_s, tolerance(s, "identity_rel"), Comparison::LessEqual));

    // T ∘ T⁻¹ and the pulled-back form on random antisymmetric Ψ
    const GridBasis grid(n, s.bc);
    const PotentialSpec v = s.v.on_grid(n);
    const InteractionSpec w = s.w.on_grid(n);
    const OrbitalSet orbitals = cholesky_orbitals(grid);
    const SlaterBasis basis(orbitals.size(), np);
    Vector v_nodes(m), ramp(m);
    for (std::size_t i = 0; i < m; ++i) v_nodes[i] = 10.0 * static_cast<double>(i) / static_cast<double>(n);
    Matrix w_nodes(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double d = static_cast<double>(i) - static_cast<double>(j);
            w_nodes(i, j) = std::exp(-d * d / (0.02 * static_cast<double>(n * n)));
        }
    double ext_inv = 0.0, pull = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Vector c(basis.size());
        for (double& x : c) x = gauss(rng);
        const NodalTensor t = to_nodal_tensor(c, basis, orbitals);
        const SimplexData sd = restrict_to_simplex(t);
        const NodalTensor back = extend_from_simplex(sd);
        ext_inv = std::max(ext_inv, max_abs_diff(back.data(), t.data()) / max_abs(t.data()));
        const double a = lumped_form(t, v_nodes, &w_nodes);
        const double b = lumped_form(sd, v_nodes, &w_nodes);
        pull = std::max(pull, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    r.add(make_check("extend_after_restrict", ext_inv, tolerance(s, "identity_rel"), Comparison::LessEqual));
    r.add(make_check("pullback_form", pull, tolerance(s, "pullback_rel"), Comparison::LessEqual));

    // tessellation of I_N by the reflected simplices
    const auto points = static_cast<std::size_t>(tolerance(s, "tessellation_points"));
    const std::vector<Permutation> perms = all_permutations(np);
    std::vector<std::size_t> counts(perms.size(), 0);
    std::size_t bad = 0;
    std::vector<double> x(np), y(np);
    for (std::size_t p = 0; p < points; ++p) {
        for (double& xi : x) xi = unif(rng);
        std::size_t hits = 0, which = 0;
        for (std::size_t q = 0; q < perms.size(); ++q) {
            bool inside = true;
            for (std::size_t k = 1; k < np && inside; ++k) inside = x[perms[q][k - 1]] < x[perms[q][k]];
            if (inside) {
                ++hits;
                which = q;
            }
        }
        const CellLocation loc = locate_cell(x);
        if (hits != 1 || !(loc.sigma == perms[which])) ++bad;
        ++counts[which];
    }
    const double share = 1.0 / static_cast<double>(perms.size());
    const double se = std::sqrt(share * (1 - share) / static_cast<double>(points));
    double worst_z = 0.0;
    for (std::size_t c : counts)
        worst_z = std::max(worst_z, std::abs(static_cast<double>(c) / static_cast<double>(points) - share) / se);
    r.add(make_check("tessellation_violations", static_cast<double>(bad), 0.0, Comparison::LessEqual,
                     std::to_string(points) + " points"));
    r.add(make_check("cell_volume_z", worst_z, tolerance(s, "volume_sigma"), Comparison::LessEqual));

    // densities and antisymmetry of an eigenstate
    const auto [h, sr] = solve_problem(v, w, s.bc, np, n, 1, s.solver);
    const NodalTensor psi = to_nodal_tensor(sr.eigenvectors[0], h);
    const Vector rho = reduced_density(sr.eigenvectors[0], h);
    const Matrix rho2 = reduced_pair_density(psi);
    const double nn = static_cast<double>(np);
    r.add(make_check("density_integral", std::abs(trapezoid_integral(rho) - nn), tolerance(s, "density_abs"),
                     Comparison::LessEqual));
    r.add(make_check("pair_density_integral", std::abs(trapezoid_integral(rho2) - nn * (nn - 1)),
                     tolerance(s, "pair_density_abs"), Comparison::LessEqual));
    double anti = 0.0;
    const OrbitalSet& orb = h.context()->orbitals;
    for (int trial = 0; trial < 100; ++trial) {
        for (double& xi : x) xi = unif(rng);
        const std::size_t i = trial % np, j = (trial + 1) % np;
        y = x;
        std::swap(y[i], y[j]);
        anti = std::max(anti, std::abs(evaluate_wavefunction(sr.eigenvectors[0], h.basis(), orb, x) +
                                       evaluate_wavefunction(sr.eigenvectors[0], h.basis(), orb, y)));
    }
    r.add(make_check("antisymmetry", anti, tolerance(s, "antisymmetry_abs"), Comparison::LessEqual));
}

}  // namespace detail

/// Runs one scenario. Failures inside the solvers become report-level errors.
inline VerificationReport run_scenario(const Scenario& s) {
    VerificationReport r;
    r.scenario = s.name;
    r.kind = to_string(s.kind);
    r.section = section_of(s.kind);
    r.expected = to_string(s.expected);
    try {
        detail::describe_problem(s, r);
        switch (s.kind) {
            case ScenarioKind::FreeSpectrum: detail::run_free_spectrum(s, r); break;
            case ScenarioKind::SingleParticleGaps: detail::run_gaps(s, r); break;
            case ScenarioKind::SlaterSum: {
                const VerificationReport o =
                    slater_sum_oracle(s.v.on_grid(s.grids.first), s.bc, s.n_particles, s.k, s.grids.first,
                                      detail::tolerance(s, "rel_dev"), s.solver);
                for (const auto& c : o.checks) r.add(c);
                for (const auto& e : o.environment) r.environment.push_back(e);
                break;
            }
            case ScenarioKind::SlaterCondon: detail::run_slater_condon(s, r); break;
            case ScenarioKind::NondegeneracyLocal:
            case ScenarioKind::NondegeneracyNonlocal: detail::run_nondegeneracy(s, r); break;
            case ScenarioKind::Positivity: detail::run_positivity(s, r); break;
            case ScenarioKind::Monotonicity: detail::run_monotonicity(s, r); break;
            case ScenarioKind::NeumannTrace: detail::run_neumann(s, r); break;
            case ScenarioKind::Structural: detail::run_structural(s, r); break;
        }
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

/// Runs scenarios concurrently; results keep the input order.
inline std::vector<VerificationReport> run_scenarios(const std::vector<Scenario>& scenarios) {
    std::vector<VerificationReport> out(scenarios.size());
    parallel_for(
        scenarios.size(), [&](std::size_t i) { out[i] = run_scenario(scenarios[i]); }, 1);
    return out;
}

// ---------------------------------------------------------------------------
// Default manifest
// ---------------------------------------------------------------------------

inline constexpr const char* manifest_version = "fermigate-manifest/1";

/// The fixed acceptance scenario matrix.
inline std::vector<Scenario> default_manifest() {
    std::vector<Scenario> out;
    auto add = [&](Scenario s) { out.push_back(std::move(s)); };
    const auto qp = [](double a) { return BoundarySpec::quasi_periodic(a); };
    const PotentialInput free_v{};
    const PotentialInput well{DeltaPotential{0.5, -10.0}};
    const PotentialInput bump{DeltaPotential{0.3, 4.0}};
    const PotentialInput ramp{SampledPotential{}, "ramp", 10.0};
    const InteractionInput none{};

    // single-particle spectra
    add({.name = "free_spectrum/dirichlet", .kind = ScenarioKind::FreeSpectrum, .grids = {200, 400}, .k = 5});
    add({.name = "free_spectrum/periodic",
         .kind = ScenarioKind::FreeSpectrum,
         .bc = qp(1.0),
         .grids = {200, 400},
         .k = 3});
    add({.name = "free_spectrum/antiperiodic",
         .kind = ScenarioKind::FreeSpectrum,
         .bc = qp(-1.0),
         .grids = {200, 400},
         .k = 2});

    // gap law
    add({.name = "gaps/periodic/free", .kind = ScenarioKind::SingleParticleGaps, .bc = qp(1.0), .grids = {200, 400}, .k = 3});
    add({.name = "gaps/periodic/well",
         .kind = ScenarioKind::SingleParticleGaps,
         .v = well,
         .bc = qp(1.0),
         .grids = {200, 400},
         .k = 3});
    add({.name = "gaps/antiperiodic/free",
         .kind = ScenarioKind::SingleParticleGaps,
         .bc = qp(-1.0),
         .grids = {200, 400},
         .k = 3});

    // Slater sums
    struct SumCase {
        std::size_t n;
        BoundarySpec bc;
        std::size_t cells;
        const char* tag;
    };
    for (const SumCase& c : {SumCase{2, BoundarySpec::dirichlet(), 40, "N2/dirichlet"},
                             SumCase{3, BoundarySpec::dirichlet(), 20, "N3/dirichlet"},
                             SumCase{2, qp(-1.0), 40, "N2/antiperiodic"},
                             SumCase{3, qp(1.0), 20, "N3/periodic"}})
        for (const auto& [v, vtag] : {std::pair{free_v, "free"}, std::pair{bump, "bump"}})
            add({.name = std::string("slater_sum/") + c.tag + "/" + vtag,
                 .kind = ScenarioKind::SlaterSum,
                 .v = v,
                 .bc = c.bc,
                 .n_particles = c.n,
                 .grids = {c.cells, 2 * c.cells},
                 .k = 6});

    // Slater–Condon against brute force, six orbitals
    for (const auto& [v, vtag] : {std::pair{free_v, "free"}, std::pair{well, "well"}, std::pair{ramp, "ramp"}})
        for (const auto& [w, wtag] :
             {std::pair{none, "none"}, std::pair{InteractionInput{DeltaContact{5.0}}, "contact+5"},
              std::pair{InteractionInput{DeltaContact{-5.0}}, "contact-5"}})
            for (const auto& [bc, cells, btag] : {std::tuple{BoundarySpec::dirichlet(), std::size_t{7}, "dirichlet"},
                                                   std::tuple{BoundarySpec::free(), std::size_t{5}, "free"},
                                                   std::tuple{qp(1.0), std::size_t{6}, "periodic"}})
                add({.name = std::string("slater_condon/") + btag + "/" + vtag + "/" + wtag,
                     .kind = ScenarioKind::SlaterCondon,
                     .v = v,
                     .w = w,
                     .bc = bc,
                     .n_particles = 2,
                     .grids = {cells, 2 * cells}});

    // non-degeneracy
    const InteractionInput contact{DeltaContact{5.0}};
    add({.name = "nondegeneracy/well+contact",
         .kind = ScenarioKind::NondegeneracyLocal,
         .v = well,
         .w = contact,
         .n_particles = 2,
         .grids = {40, 80}});
    struct ParityCase {
        double alpha;
        std::size_t n;
        std::size_t cells;
        const char* tag;
    };
    for (const ParityCase& c : {ParityCase{1.0, 3, 20, "periodic/N3"}, ParityCase{1.0, 2, 40, "periodic/N2"},
                                ParityCase{-1.0, 2, 40, "antiperiodic/N2"}, ParityCase{-1.0, 3, 20, "antiperiodic/N3"}})
        add({.name = std::string("parity/") + c.tag,
             .kind = ScenarioKind::NondegeneracyNonlocal,
             .bc = qp(c.alpha),
             .n_particles = c.n,
             .grids = {c.cells, 2 * c.cells},
             .expected = parity_expectation(qp(c.alpha), c.n)});

    // positivity on the simplex
    add({.name = "positivity/well+contact",
         .kind = ScenarioKind::Positivity,
         .v = well,
         .w = contact,
         .n_particles = 2,
         .grids = {40, 80}});
    add({.name = "positivity/periodic/N3", .kind = ScenarioKind::Positivity, .bc = qp(1.0), .n_particles = 3, .grids = {20, 40}});
    add({.name = "positivity/antiperiodic/N2",
         .kind = ScenarioKind::Positivity,
         .bc = qp(-1.0),
         .n_particles = 2,
         .grids = {40, 80}});
    add({.name = "positivity/well+contact/excited",
         .kind = ScenarioKind::Positivity,
         .v = well,
         .w = contact,
         .n_particles = 2,
         .grids = {40, 80},
         .expected = Expectation::NegativeControl,
         .state = "first-excited"});

    // monotonicity in the Dirichlet set
    add({.name = "monotonicity/free", .kind = ScenarioKind::Monotonicity, .n_particles = 2, .grids = {40, 80}});
    add({.name = "monotonicity/contact",
         .kind = ScenarioKind::Monotonicity,
         .w = contact,
         .n_particles = 2,
         .grids = {40, 80}});

    // Neumann trace
    add({.name = "neumann/N1", .kind = ScenarioKind::NeumannTrace, .n_particles = 1, .grids = {200, 400}});
    add({.name = "neumann/N2", .kind = ScenarioKind::NeumannTrace, .n_particles = 2, .grids = {80, 160}});

    // structural invariants
    add({.name = "structural/N3",
         .kind = ScenarioKind::Structural,
         .v = well,
         .w = InteractionInput{NoInteraction{}, "gaussian", 2.0},
         .n_particles = 3,
         .grids = {12, 24},
         .seed = 20240611});
    add({.name = "structural/N2",
         .kind = ScenarioKind::Structural,
         .v = well,
         .w = InteractionInput{NoInteraction{}, "gaussian", 2.0},
         .n_particles = 2,
         .grids = {24, 48},
         .seed = 7});
    return out;
}

/// Scenario of the default manifest with this name, if any.
inline std::optional<Scenario> find_scenario(const std::string& name) {
    for (auto& s : default_manifest())
        if (s.name == name) return s;
    return std::nullopt;
}

}  // namespace fermigate
