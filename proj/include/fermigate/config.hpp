#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/manybody.hpp"
#include "fermigate/mb_spectrum.hpp"
#include "fermigate/sp_spectrum.hpp"
#include "fermigate/verify.hpp"

namespace fermigate {

inline constexpr const char* config_schema = "fermigate-config/1";

/// A configuration problem, located by key path and (1-based) line and column.
class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& message, int line = -1, int column = -1)
        : Error(format(key, message, line, column)), key_(key), line_(line), column_(column) {}

    [[nodiscard]] const std::string& key() const noexcept { return key_; }
    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& key, const std::string& message, int line, int column) {
        std::string s = "config";
        if (line >= 0) s += ":" + std::to_string(line) + ":" + std::to_string(column);
        if (!key.empty()) s += ": " + key;
        return s + ": " + message;
    }
    std::string key_;
    int line_;
    int column_;
};

enum class Command { SolveSingle, SolveMany, Verify, Report };

inline std::string to_string(Command c) {
    switch (c) {
        case Command::SolveSingle: return "solve-single";
        case Command::SolveMany: return "solve-many";
        case Command::Verify: return "verify";
        case Command::Report: return "report";
    }
    return "unknown";
}

inline std::optional<Command> command_from_string(const std::string& s) {
    for (Command c : {Command::SolveSingle, Command::SolveMany, Command::Verify, Command::Report})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

struct ProblemConfig {
    BoundarySpec bc = BoundarySpec::dirichlet();
    PotentialInput v;
    InteractionInput w;
    std::size_t n_particles = 1;
    std::optional<std::size_t> n_cells;
    std::optional<std::pair<std::size_t, std::size_t>> grids;
    std::size_t k = 6;
};

struct OutputConfig {
    std::string path;         // empty: standard output
    std::string format = "json";
};

struct VerifyConfig {
    std::vector<std::string> scenarios;  // manifest names or scenario kinds; empty: whole manifest
    std::optional<Expectation> expected;
    std::string state = "ground";
    std::map<std::string, double> tolerances;
};

struct RunConfig {
    Command command = Command::Verify;
    ProblemConfig problem;
    OutputConfig output;
    std::optional<std::uint64_t> seed;  // overrides scenario seeds when set
    MbSolverOptions mb_solver;
    SpSolverOptions sp_solver;
    std::size_t slater_cap = 100000;
    VerifyConfig verify;
    std::string input;  // report: JSON document to read

    /// (n, 2n) from grids, or from n_cells.
    [[nodiscard]] std::optional<std::pair<std::size_t, std::size_t>> grid_pair() const {
        if (problem.grids) return problem.grids;
        if (problem.n_cells) return std::pair{*problem.n_cells, 2 * *problem.n_cells};
        return std::nullopt;
    }
};

namespace detail {

class ConfigReader {
public:
    static std::pair<int, int> where(const YAML::Node& n) {
        const YAML::Mark m = n.Mark();
        if (m.line < 0) return {-1, -1};
        return {m.line + 1, m.column + 1};
    }

    [[noreturn]] static void fail(const YAML::Node& n, const std::string& key, const std::string& msg) {
        const auto [l, c] = where(n);
        throw ConfigError(key, msg, l, c);
    }

    static void expect_map(const YAML::Node& n, const std::string& key, const std::set<std::string>& allowed) {
        if (!n.IsMap()) fail(n, key, "expected a mapping");
        for (const auto& kv : n) {
            const auto name = kv.first.as<std::string>();
            if (!allowed.count(name)) {
                std::string list;
                for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
                fail(kv.first, key.empty() ? name : key + "." + name, "unknown key (allowed: " + list + ")");
            }
        }
    }

    static std::string str(const YAML::Node& n, const std::string& key) {
        if (!n.IsScalar()) fail(n, key, "expected a string");
        return n.as<std::string>();
    }

    static double real(const YAML::Node& n, const std::string& key) {
        if (!n.IsScalar()) fail(n, key, "expected a number");
        double x = 0.0;
        if (!YAML::convert<double>::decode(n, x)) fail(n, key, "expected a number, got '" + n.Scalar() + "'");
        if (!std::isfinite(x)) fail(n, key, "must be finite");
        return x;
    }

    static std::uint64_t integer(const YAML::Node& n, const std::string& key, std::uint64_t min = 0) {
        if (!n.IsScalar()) fail(n, key, "expected an integer");
        std::int64_t x = 0;
        if (!YAML::convert<std::int64_t>::decode(n, x))
            fail(n, key, "expected an integer, got '" + n.Scalar() + "'");
        if (x < 0 || static_cast<std::uint64_t>(x) < min)
            fail(n, key, "must be an integer >= " + std::to_string(min));
        return static_cast<std::uint64_t>(x);
    }

    static std::vector<double> reals(const YAML::Node& n, const std::string& key) {
        if (!n.IsSequence()) fail(n, key, "expected a list of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < n.size(); ++i) out.push_back(real(n[i], key + "[" + std::to_string(i) + "]"));
        return out;
    }

    static PotentialInput potential(const YAML::Node& n, const std::string& key) {
        expect_map(n, key, {"type", "x0", "strength", "values", "profile", "scale", "alpha", "cell_values"});
        if (!n["type"]) fail(n, key + ".type", "missing required key");
        const std::string type = str(n["type"], key + ".type");
        auto only = [&](const std::set<std::string>& ok) {
            for (const auto& kv : n) {
                const auto name = kv.first.as<std::string>();
                if (name != "type" && !ok.count(name))
                    fail(kv.first, key + "." + name, "not valid for potential type '" + type + "'");
            }
        };
        PotentialInput p;
        if (type == "none") {
            only({});
        } else if (type == "delta") {
            only({"x0", "strength"});
            DeltaPotential d;
            if (n["x0"]) d.x0 = real(n["x0"], key + ".x0");
            if (d.x0 < 0.0 || d.x0 > 1.0) fail(n["x0"], key + ".x0", "must lie in [0, 1]");
            if (!n["strength"]) fail(n, key + ".strength", "missing required key");
            d.strength = real(n["strength"], key + ".strength");
            p.spec = d;
        } else if (type == "sampled") {
            only({"values", "profile", "scale"});
            if (n["values"] && n["profile"]) fail(n, key, "give either values or profile, not both");
            if (n["values"]) {
                p.spec = SampledPotential{reals(n["values"], key + ".values")};
            } else if (n["profile"]) {
                p.profile = str(n["profile"], key + ".profile");
                if (p.profile != "ramp") fail(n["profile"], key + ".profile", "unknown profile (allowed: ramp)");
                if (n["scale"]) p.scale = real(n["scale"], key + ".scale");
            } else {
                fail(n, key, "sampled potential needs values or profile");
            }
        } else if (type == "h-minus-one") {
            only({"alpha", "cell_values"});
            HMinusOnePotential h;
            if (n["alpha"]) h.alpha = real(n["alpha"], key + ".alpha");
            if (n["cell_values"]) h.cell_values = reals(n["cell_values"], key + ".cell_values");
            p.spec = h;
        } else {
            fail(n["type"], key + ".type", "unknown potential type '" + type + "' (allowed: none, delta, sampled, h-minus-one)");
        }
        return p;
    }

    static InteractionInput interaction(const YAML::Node& n, const std::string& key) {
        expect_map(n, key, {"type", "g", "values", "profile", "scale"});
        if (!n["type"]) fail(n, key + ".type", "missing required key");
        const std::string type = str(n["type"], key + ".type");
        auto only = [&](const std::set<std::string>& ok) {
            for (const auto& kv : n) {
                const auto name = kv.first.as<std::string>();
                if (name != "type" && !ok.count(name))
                    fail(kv.first, key + "." + name, "not valid for interaction type '" + type + "'");
            }
        };
        InteractionInput w;
        if (type == "none") {
            only({});
        } else if (type == "delta-contact") {
            only({"g"});
            if (!n["g"]) fail(n, key + ".g", "missing required key");
            w.spec = DeltaContact{real(n["g"], key + ".g")};
        } else if (type == "kernel") {
            only({"values", "profile", "scale"});
            if (n["values"] && n["profile"]) fail(n, key, "give either values or profile, not both");
            if (n["values"]) {
                const YAML::Node rows = n["values"];
                if (!rows.IsSequence() || rows.size() == 0) fail(rows, key + ".values", "expected a square matrix");
                Matrix m(rows.size(), rows.size());
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const auto row = reals(rows[i], key + ".values[" + std::to_string(i) + "]");
                    if (row.size() != rows.size()) fail(rows[i], key + ".values", "matrix must be square");
                    for (std::size_t j = 0; j < row.size(); ++j) m(i, j) = row[j];
                }
                w.spec = SampledKernel{std::move(m)};
            } else if (n["profile"]) {
                w.profile = str(n["profile"], key + ".profile");
                if (w.profile != "gaussian") fail(n["profile"], key + ".profile", "unknown profile (allowed: gaussian)");
                if (n["scale"]) w.scale = real(n["scale"], key + ".scale");
            } else {
                fail(n, key, "kernel interaction needs values or profile");
            }
        } else {
            fail(n["type"], key + ".type", "unknown interaction type '" + type + "' (allowed: none, delta-contact, kernel)");
        }
        return w;
    }

    static BoundarySpec boundary(const YAML::Node& problem) {
        const YAML::Node b = problem["bc"];
        const std::string name = b ? str(b, "problem.bc") : "dirichlet";
        const YAML::Node alpha = problem["alpha"];
        const YAML::Node line = problem["line"];
        if (alpha && name != "quasiperiodic") fail(alpha, "problem.alpha", "only valid with bc = quasiperiodic");
        if (line && name != "line") fail(line, "problem.line", "only valid with bc = line");
        if (name == "dirichlet") return BoundarySpec::dirichlet();
        if (name == "dirichlet-left") return BoundarySpec::dirichlet_left();
        if (name == "dirichlet-right") return BoundarySpec::dirichlet_right();
        if (name == "free") return BoundarySpec::free();
        if (name == "quasiperiodic") {
            if (!alpha) fail(problem, "problem.alpha", "missing required key for bc = quasiperiodic");
            const double a = real(alpha, "problem.alpha");
            if (a == 0.0) fail(alpha, "problem.alpha", "alpha must be nonzero");
            return BoundarySpec::quasi_periodic(a);
        }
        if (name == "line") {
            if (!line) fail(problem, "problem.line", "missing required key for bc = line");
            const auto ab = reals(line, "problem.line");
            if (ab.size() != 2) fail(line, "problem.line", "expected [a, b]");
            if (ab[0] == 0.0 && ab[1] == 0.0) fail(line, "problem.line", "direction must be nonzero");
            return BoundarySpec::line(ab[0], ab[1]);
        }
        fail(b, "problem.bc",
             "unknown boundary '" + name + "' (allowed: dirichlet, dirichlet-left, dirichlet-right, free, quasiperiodic, line)");
    }
};

}  // namespace detail

/// Parses "n,2n".
inline std::pair<std::size_t, std::size_t> parse_grids(const std::string& text) {
    const auto comma = text.find(',');
    auto num = [&](const std::string& s) -> std::size_t {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || v < 4) throw ConfigError("grids", "expected \"n,2n\" with n >= 4, got '" + text + "'");
        return static_cast<std::size_t>(v);
    };
    if (comma == std::string::npos) throw ConfigError("grids", "expected \"n,2n\", got '" + text + "'");
    const auto g = std::pair{num(text.substr(0, comma)), num(text.substr(comma + 1))};
    if (g.second != 2 * g.first) throw ConfigError("grids", "second grid must be twice the first");
    return g;
}

/// Strict parse of a YAML run configuration.
inline RunConfig parse_config(const std::string& text) {
    using R = detail::ConfigReader;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    RunConfig cfg;
    if (root.IsNull()) throw ConfigError("", "empty configuration");
    R::expect_map(root, "", {"schema", "command", "problem", "output", "seed", "solver", "verify", "input"});
    if (root["schema"] && R::str(root["schema"], "schema") != config_schema)
        R::fail(root["schema"], "schema", std::string("unsupported schema (expected ") + config_schema + ")");
    if (!root["command"]) throw ConfigError("command", "missing required key");
    {
        const auto c = command_from_string(R::str(root["command"], "command"));
        if (!c) R::fail(root["command"], "command", "unknown command (allowed: solve-single, solve-many, verify, report)");
        cfg.command = *c;
    }

    if (const YAML::Node p = root["problem"]) {
        R::expect_map(p, "problem",
                      {"bc", "alpha", "line", "n_cells", "grids", "N", "k", "potential", "interaction"});
        cfg.problem.bc = R::boundary(p);
        if (p["n_cells"]) cfg.problem.n_cells = R::integer(p["n_cells"], "problem.n_cells", 4);
        if (p["grids"]) {
            const YAML::Node g = p["grids"];
            if (!g.IsSequence() || g.size() != 2) R::fail(g, "problem.grids", "expected [n, 2n]");
            const std::size_t a = R::integer(g[0], "problem.grids[0]", 4);
            const std::size_t b = R::integer(g[1], "problem.grids[1]", 8);
            if (b != 2 * a) R::fail(g, "problem.grids", "second grid must be twice the first");
            cfg.problem.grids = std::pair{a, b};
        }
        if (p["N"]) cfg.problem.n_particles = R::integer(p["N"], "problem.N", 1);
        if (p["k"]) cfg.problem.k = R::integer(p["k"], "problem.k", 1);
        if (p["potential"]) cfg.problem.v = R::potential(p["potential"], "problem.potential");
        if (p["interaction"]) cfg.problem.w = R::interaction(p["interaction"], "problem.interaction");
    }

    if (const YAML::Node o = root["output"]) {
        R::expect_map(o, "output", {"path", "format"});
        if (o["path"]) cfg.output.path = R::str(o["path"], "output.path");
        if (o["format"]) {
            cfg.output.format = R::str(o["format"], "output.format");
            if (cfg.output.format != "json" && cfg.output.format != "csv")
                R::fail(o["format"], "output.format", "expected json or csv");
        }
    }
    if (root["seed"]) cfg.seed = R::integer(root["seed"], "seed");
    if (root["input"]) cfg.input = R::str(root["input"], "input");

    if (const YAML::Node s = root["solver"]) {
        R::expect_map(s, "solver", {"dense_limit", "target_rel_tol", "accept_rel_tol", "sp_dense_limit", "slater_cap"});
        if (s["dense_limit"]) cfg.mb_solver.dense_limit = R::integer(s["dense_limit"], "solver.dense_limit");
        auto positive = [&](const char* k) {
            const double x = R::real(s[k], std::string("solver.") + k);
            if (!(x > 0.0)) R::fail(s[k], std::string("solver.") + k, "must be positive");
            return x;
        };
        if (s["target_rel_tol"]) cfg.mb_solver.target_rel_tol = positive("target_rel_tol");
        if (s["accept_rel_tol"]) cfg.mb_solver.accept_rel_tol = positive("accept_rel_tol");
        if (s["sp_dense_limit"]) cfg.sp_solver.dense_limit = R::integer(s["sp_dense_limit"], "solver.sp_dense_limit");
        if (s["slater_cap"]) cfg.slater_cap = R::integer(s["slater_cap"], "solver.slater_cap", 1);
    }

    if (const YAML::Node v = root["verify"]) {
        R::expect_map(v, "verify", {"scenario", "scenarios", "expected", "state", "tolerances"});
        if (v["scenario"]) cfg.verify.scenarios.push_back(R::str(v["scenario"], "verify.scenario"));
        if (v["scenarios"]) {
            if (!v["scenarios"].IsSequence()) R::fail(v["scenarios"], "verify.scenarios", "expected a list of names");
            for (std::size_t i = 0; i < v["scenarios"].size(); ++i)
                cfg.verify.scenarios.push_back(R::str(v["scenarios"][i], "verify.scenarios[" + std::to_string(i) + "]"));
        }
        if (v["expected"]) {
            const auto e = R::str(v["expected"], "verify.expected");
            if (e == "pass")
                cfg.verify.expected = Expectation::Pass;
            else if (e == "negative-control")
                cfg.verify.expected = Expectation::NegativeControl;
            else
                R::fail(v["expected"], "verify.expected", "expected pass or negative-control");
        }
        if (v["state"]) {
            cfg.verify.state = R::str(v["state"], "verify.state");
            if (cfg.verify.state != "ground" && cfg.verify.state != "first-excited")
                R::fail(v["state"], "verify.state", "expected ground or first-excited");
        }
        if (v["tolerances"]) {
            const YAML::Node t = v["tolerances"];
            if (!t.IsMap()) R::fail(t, "verify.tolerances", "expected a mapping of name: value");
            for (const auto& kv : t) {
                const auto name = kv.first.as<std::string>();
                cfg.verify.tolerances[name] = R::real(kv.second, "verify.tolerances." + name);
            }
        }
    }

    // command-specific requirements
    if (cfg.command == Command::SolveSingle || cfg.command == Command::SolveMany) {
        if (!root["problem"]) throw ConfigError("problem", "missing required section for " + to_string(cfg.command));
        if (!cfg.problem.n_cells && !cfg.problem.grids)
            R::fail(root["problem"], "problem.n_cells", "missing: give n_cells or grids");
    }
    if (cfg.command == Command::SolveSingle && cfg.problem.n_particles != 1)
        R::fail(root["problem"]["N"], "problem.N", "solve-single needs N = 1");
    if (cfg.command == Command::Report && cfg.input.empty() && root["input"])
        R::fail(root["input"], "input", "must not be empty");
    return cfg;
}

/// Scenarios selected by a verify configuration.
///
/// Each entry of verify.scenarios is either a manifest scenario name or a
/// scenario kind; a kind builds a scenario from the problem section. An empty
/// list selects the whole default manifest.
inline std::vector<Scenario> scenarios_from_config(const RunConfig& cfg) {
    std::vector<Scenario> out;
    const std::vector<Scenario> manifest = default_manifest();
    if (cfg.verify.scenarios.empty()) {
        out = manifest;
    } else {
        for (const auto& name : cfg.verify.scenarios) {
            if (const auto kind = scenario_kind_from_string(name)) {
                Scenario s;
                s.name = name + "/custom";
                s.kind = *kind;
                s.v = cfg.problem.v;
                s.w = cfg.problem.w;
                s.bc = cfg.problem.bc;
                s.n_particles = cfg.problem.n_particles;
                s.k = cfg.problem.k;
                if (const auto g = cfg.grid_pair()) s.grids = *g;
                s.state = cfg.verify.state;
                s.expected = cfg.verify.expected.value_or(Expectation::Pass);
                if (*kind == ScenarioKind::NondegeneracyNonlocal && !cfg.verify.expected)
                    s.expected = parity_expectation(s.bc, s.n_particles);
                if (*kind == ScenarioKind::Positivity && s.state == "first-excited" && !cfg.verify.expected)
                    s.expected = Expectation::NegativeControl;
                out.push_back(std::move(s));
                continue;
            }
            bool found = false;
            for (const auto& s : manifest) {
                // a name selects that scenario, or every scenario under it as a prefix ("parity/")
                if (s.name == name || (name.back() == '/' && s.name.rfind(name, 0) == 0)) {
                    out.push_back(s);
                    found = true;
                }
            }
            if (!found) throw ConfigError("verify.scenario", "unknown scenario '" + name + "'");
        }
    }
    for (auto& s : out) {
        if (cfg.seed) s.seed = *cfg.seed;
        s.solver = cfg.mb_solver;
        for (const auto& [k, v] : cfg.verify.tolerances) {
            if (!default_tolerances(s.kind).count(k))
                throw ConfigError("verify.tolerances." + k, "not a tolerance of scenario kind " + to_string(s.kind));
            s.tolerances[k] = v;
        }
    }
    return out;
}

}  // namespace fermigate
