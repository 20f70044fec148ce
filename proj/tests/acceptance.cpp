// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fermigate/report.hpp"
#include "fermigate/verify.hpp"

using namespace fermigate;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool ok = true;
    std::vector<std::string> notes;

    void fail(std::string why) {
        ok = false;
        notes.push_back(std::move(why));
    }
    void expect(bool cond, const std::string& why) {
        if (!cond) fail(why);
    }
};

std::vector<Scenario> with_prefix(const std::string& prefix) {
    std::vector<Scenario> out;
    for (auto& s : default_manifest())
        if (s.name.rfind(prefix, 0) == 0) out.push_back(std::move(s));
    return out;
}

const Check* find_check(const VerificationReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

/// Runs scenarios one by one and folds their verdicts into the outcome.
std::vector<VerificationReport> run_all(const std::vector<Scenario>& ss, Outcome& out, double per_scenario_limit = 0) {
    std::vector<VerificationReport> reports;
    for (const auto& s : ss) {
        const auto t0 = Clock::now();
        reports.push_back(run_scenario(s));
        const double dt = seconds_since(t0);
        const auto& r = reports.back();
        if (!r.error.empty()) out.fail(s.name + ": " + r.error);
        if (r.checks.empty() && r.error.empty()) out.fail(s.name + ": no checks");
        for (const auto& c : r.checks)
            if (!c.passed)
                out.fail(s.name + " :: " + c.name + " = " + format12(c.measured) + " " + to_string(c.comparison) + " " +
                         format12(c.threshold));
        if (per_scenario_limit > 0 && dt >= per_scenario_limit)
            out.fail(s.name + " took " + format12(dt) + " s (limit " + format12(per_scenario_limit) + " s)");
    }
    return reports;
}

void time_limit(Outcome& out, Clock::time_point t0, double limit, const std::string& what) {
    const double dt = seconds_since(t0);
    if (dt >= limit) out.fail(what + " took " + format12(dt) + " s (limit " + format12(limit) + " s)");
}

constexpr double pi2 = std::numbers::pi * std::numbers::pi;

Outcome free_spectra() {
    Outcome o;
    run_all(with_prefix("free_spectrum/"), o, 2.0);
    return o;
}

Outcome gap_law() {
    Outcome o;
    const auto reports = run_all(with_prefix("gaps/"), o);
    for (const auto& r : reports) {
        // pairs (1,2), (3,4), (5,6) for k ≤ 3 must all be present
        std::size_t pairs = 0;
        for (const auto& c : r.checks)
            for (const char* p : {"gap1_2.", "gap3_4.", "gap5_6."})
                if (c.name.rfind(p, 0) == 0) ++pairs;
        o.expect(pairs == 3, r.scenario + ": missing gap pairs for k <= 3");
    }
    return o;
}

Outcome slater_sums() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto reports = run_all(with_prefix("slater_sum/"), o);
    o.expect(reports.size() == 8, "expected 8 slater_sum scenarios");
    for (const auto& r : reports) {
        const Check* c = find_check(r, "max_rel_deviation");
        o.expect(c && c->threshold == 1e-8, r.scenario + ": deviation check missing or at the wrong tolerance");
        o.expect(find_check(r, "lambda6") != nullptr, r.scenario + ": fewer than 6 eigenvalues compared");
    }
    time_limit(o, t0, 30.0, "slater_sum suite");
    return o;
}

Outcome slater_condon() {
    Outcome o;
    const auto reports = run_all(with_prefix("slater_condon/"), o);
    o.expect(reports.size() == 27, "expected 27 slater_condon scenarios");
    for (const auto& r : reports) {
        const Check* c = find_check(r, "max_abs_deviation");
        o.expect(c && c->threshold == 1e-10, r.scenario + ": deviation check missing or at the wrong tolerance");
        bool six = false;
        for (const auto& [k, v] : r.environment) six = six || (k == "n_orbitals" && v == "6");
        o.expect(six, r.scenario + ": not six orbitals");
    }
    return o;
}

Outcome interacting_nondegeneracy() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto reports = run_all(with_prefix("nondegeneracy/well+contact"), o);
    for (const auto& r : reports) {
        bool verdict = false;
        for (const auto& [k, v] : r.environment) verdict = verdict || (k == "verdict" && v == "non-degenerate");
        o.expect(verdict, r.scenario + ": verdict is not non-degenerate");
    }
    time_limit(o, t0, 60.0, "nondegeneracy/well+contact");
    return o;
}

Outcome parity() {
    Outcome o;
    const auto reports = run_all(with_prefix("parity/"), o);
    o.expect(reports.size() == 4, "expected 4 parity scenarios");
    const std::vector<std::pair<std::string, double>> stable{{"parity/periodic/N3", 12 * pi2},
                                                            {"parity/antiperiodic/N2", 8 * pi2}};
    for (const auto& r : reports) {
        for (const auto& [name, gap] : stable) {
            if (r.scenario != name) continue;
            const Check* g = find_check(r, "gap_coarse");
            o.expect(g && std::abs(g->measured / gap - 1.0) <= 5e-2, name + ": gap not near " + format12(gap));
        }
        const bool control = r.expected == "negative-control";
        bool verdict = false;
        for (const auto& [k, v] : r.environment)
            verdict = verdict || (k == "verdict" && v == (control ? "degenerate" : "non-degenerate"));
        o.expect(verdict, r.scenario + ": unexpected degeneracy verdict");
    }
    return o;
}

Outcome positivity() {
    Outcome o;
    const auto reports = run_all(with_prefix("positivity/"), o);
    o.expect(reports.size() == 4, "expected 4 positivity scenarios");
    for (const auto& r : reports) {
        const Check* c = find_check(r, "sign_consistency");
        if (!c) continue;
        if (r.expected == "pass")
            o.expect(c->threshold == 0.999 && c->comparison == Comparison::GreaterEqual, r.scenario + ": wrong bound");
        else
            o.expect(c->threshold == 0.99 && c->comparison == Comparison::LessEqual, r.scenario + ": wrong bound");
    }
    return o;
}

Outcome monotonicity() {
    Outcome o;
    const auto reports = run_all(with_prefix("monotonicity/"), o);
    o.expect(reports.size() == 2, "expected 2 monotonicity scenarios");
    for (const auto& r : reports) {
        std::size_t coarse = 0, fine = 0;
        for (const auto& c : r.checks) {
            if (c.name.rfind("coarse_margin[", 0) == 0 && c.threshold == 0.5) ++coarse;
            if (c.name.rfind("fine_margin[", 0) == 0) ++fine;
        }
        o.expect(coarse == 2 && fine == 2, r.scenario + ": chain steps missing");
    }
    return o;
}

Outcome neumann() {
    Outcome o;
    const auto reports = run_all(with_prefix("neumann/"), o);
    o.expect(reports.size() == 2, "expected 2 neumann scenarios");
    for (const auto& r : reports) {
        o.expect(find_check(r, "weak_vs_limit") != nullptr, r.scenario + ": no weak/limit comparison");
        o.expect(find_check(r, "extension_independence") != nullptr, r.scenario + ": no extension check");
        if (r.scenario == "neumann/N1") {
            o.expect(find_check(r, "weak_vs_analytic") != nullptr, "neumann/N1: no analytic comparison (weak)");
            o.expect(find_check(r, "limit_vs_analytic") != nullptr, "neumann/N1: no analytic comparison (limit)");
        }
    }
    return o;
}

Outcome structural(Clock::time_point suite_start) {
    Outcome o;
    const auto ss = with_prefix("structural/");
    const auto first = run_all(ss, o);
    for (const auto& r : first)
        for (const char* name : {"extend_after_restrict", "tessellation_violations", "cell_volume_z",
                                 "density_integral", "pair_density_integral", "antisymmetry", "pullback_form"})
            o.expect(find_check(r, name) != nullptr, r.scenario + ": missing check " + name);
    // determinism: an independent rerun emits the same bytes
    std::vector<VerificationReport> second;
    for (const auto& s : ss) second.push_back(run_scenario(s));
    for (ReportFormat f : {ReportFormat::Json, ReportFormat::Csv})
        o.expect(emit_reports(first, f) == emit_reports(second, f), "reports differ between identical runs");
    time_limit(o, suite_start, 300.0, "acceptance suite");
    return o;
}

}  // namespace

int main() {
    const auto suite_start = Clock::now();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"single-particle free spectra", free_spectra},
        {"gap law", gap_law},
        {"Slater sum oracle", slater_sums},
        {"Slater-Condon vs brute force", slater_condon},
        {"non-degeneracy with interaction", interacting_nondegeneracy},
        {"parity condition", parity},
        {"simplex positivity", positivity},
        {"monotonicity in the Dirichlet set", monotonicity},
        {"Neumann trace", neumann},
        {"structural invariants", [&] { return structural(suite_start); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = Clock::now();
        const Outcome o = criteria[i].second();
        std::printf("%s  criterion %2zu  %-36s (%.1f s)\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    seconds_since(t0));
        for (const auto& n : o.notes) std::printf("        %s\n", n.c_str());
        std::fflush(stdout);
        failed += o.ok ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed (%.1f s)\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
                seconds_since(suite_start));
    return failed == 0 ? 0 : 1;
}
