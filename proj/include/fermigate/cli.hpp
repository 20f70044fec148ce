#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fermigate/config.hpp"
#include "fermigate/report.hpp"
#include "fermigate/simplex.hpp"
#include "fermigate/verify.hpp"
#include "fermigate/wavefunction.hpp"

namespace fermigate {

/// Exit statuses of the command-line front end.
enum ExitStatus : int { ExitOk = 0, ExitConfig = 1, ExitFailure = 2 };

inline constexpr const char* solve_schema = "fermigate-solve/1";

/// Command-line values that override the configuration file.
struct CliOverrides {
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> scenarios;
    std::optional<std::string> grids;
    std::optional<std::string> input;
};

inline void apply_overrides(RunConfig& cfg, const CliOverrides& o) {
    if (o.out) cfg.output.path = *o.out;
    if (o.format) {
        if (*o.format != "json" && *o.format != "csv") throw ConfigError("--format", "expected json or csv");
        cfg.output.format = *o.format;
    }
    if (o.seed) cfg.seed = *o.seed;
    if (!o.scenarios.empty()) cfg.verify.scenarios = o.scenarios;
    if (o.grids) cfg.problem.grids = parse_grids(*o.grids);
    if (o.input) cfg.input = *o.input;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    out << text;
}

namespace detail {

inline Json json_array(std::span<const double> xs) {
    Json a = Json::array();
    for (double x : xs) a.push_back(json_number(x));
    return a;
}

inline Json problem_json(const RunConfig& cfg, std::size_t n_cells) {
    return Json{{"boundary", describe(cfg.problem.bc)},
                {"potential", cfg.problem.v.describe()},
                {"interaction", cfg.problem.w.describe()},
                {"n_particles", cfg.problem.n_particles},
                {"n_cells", n_cells},
                {"k", cfg.problem.k}};
}

inline std::string spectrum_csv(const std::vector<double>& ev, const std::vector<double>& res) {
    std::ostringstream os;
    os << "index,eigenvalue,residual\n";
    for (std::size_t i = 0; i < ev.size(); ++i) os << i + 1 << ',' << format12(ev[i]) << ',' << format12(res[i]) << '\n';
    return os.str();
}

inline void deliver(const RunConfig& cfg, const std::string& text, std::ostream& out) {
    if (cfg.output.path.empty())
        out << text;
    else
        write_file(cfg.output.path, text);
}

inline Json gaps_json(const GapReport& g) {
    Json a = Json::array();
    for (const auto& e : g.entries)
        a.push_back(Json{{"pair", {e.lower_index, e.lower_index + 1}},
                         {"gap", json_number(e.gap)},
                         {"threshold", json_number(e.threshold)},
                         {"asserted_strict", e.asserted_strict},
                         {"verdict", to_string(e.verdict)}});
    return a;
}

inline int run_solve_single(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const auto grids = cfg.grid_pair();
    const std::size_t n = cfg.problem.grids ? cfg.problem.grids->first : *cfg.problem.n_cells;
    const GridBasis grid(n, cfg.problem.bc);
    const std::size_t k = std::min(cfg.problem.k, grid.dim());
    const SpectralResult sr = solve_sp_eig(grid, cfg.problem.v.on_grid(n), k, cfg.sp_solver);

    Json doc;
    doc["schema"] = solve_schema;
    doc["command"] = "solve-single";
    doc["problem"] = problem_json(cfg, n);
    doc["eigenvalues"] = json_array(sr.eigenvalues);
    doc["residuals"] = json_array(sr.residuals);
    if (cfg.problem.grids && k >= 2) {
        const std::size_t nf = grids->second;
        const GridBasis fine(nf, cfg.problem.bc);
        const SpectralResult fr = solve_sp_eig(fine, cfg.problem.v.on_grid(nf), k, cfg.sp_solver);
        doc["fine_eigenvalues"] = json_array(fr.eigenvalues);
        doc["gaps"] = gaps_json(gap_report_refined(sr, fr, cfg.problem.bc));
    } else if (k >= 2) {
        doc["gaps"] = gaps_json(gap_report(sr, cfg.problem.bc));
    }
    Vector x(grid.node_count());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = grid.node(i);
    doc["ground_state"] = Json{{"x", json_array(x)}, {"psi", json_array(grid.nodal_values(sr.eigenvectors[0]))}};

    for (std::size_t i = 0; i < k; ++i) log << "lambda" << i + 1 << " = " << format12(sr.eigenvalues[i]) << '\n';
    deliver(cfg, cfg.output.format == "csv" ? spectrum_csv(sr.eigenvalues, sr.residuals) : doc.dump(2) + "\n", out);
    return ExitOk;
}

inline int run_solve_many(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const std::size_t n = cfg.problem.grids ? cfg.problem.grids->first : *cfg.problem.n_cells;
    const PotentialSpec v = cfg.problem.v.on_grid(n);
    const InteractionSpec w = cfg.problem.w.on_grid(n);
    const GridBasis grid(n, cfg.problem.bc);
    const ManyBodyOperator h = assemble_manybody(eigen_orbitals(grid, v), v, w, cfg.problem.n_particles, cfg.slater_cap);
    const SpectralResult sr = solve_mb_eig(h, std::min(cfg.problem.k, h.dim()), cfg.mb_solver);

    Json doc;
    doc["schema"] = solve_schema;
    doc["command"] = "solve-many";
    doc["problem"] = problem_json(cfg, n);
    doc["dimension"] = h.dim();
    doc["eigenvalues"] = json_array(sr.eigenvalues);
    doc["residuals"] = json_array(sr.residuals);

    Vector x(grid.node_count());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = grid.node(i);
    doc["density"] = Json{{"x", json_array(x)}, {"rho", json_array(reduced_density(sr.eigenvectors[0], h))}};
    if (cfg.problem.n_particles >= 2) {
        const SimplexSample s = restrict_to_simplex(sr.eigenvectors[0], h);
        Json pts = Json::array();
        for (const auto& p : s.points) pts.push_back(json_array(p));
        Json tags = Json::array();
        for (RegionTag t : s.tags)
            tags.push_back(t == RegionTag::Interior ? "interior" : t == RegionTag::NearGammaInt ? "near-gamma-int" : "near-boundary");
        const PositivityReport p = positivity_report(s);
        doc["simplex_sample"] = Json{{"points", std::move(pts)},
                                     {"values", json_array(s.values)},
                                     {"tags", std::move(tags)},
                                     {"sign_consistency", json_number(p.sign_consistency)}};
    }
    if (const auto g = cfg.problem.grids; g && sr.eigenvalues.size() >= 2) {
        auto level = [&](std::size_t nn) {
            const auto [hh, rr] = solve_problem(cfg.problem.v.on_grid(nn), cfg.problem.w.on_grid(nn), cfg.problem.bc,
                                                cfg.problem.n_particles, nn, 2, cfg.mb_solver);
            require(rr.eigenvalues.size() >= 2, "degeneracy classification needs two states");
            return DegeneracyLevel{nn, rr.eigenvalues[0], rr.eigenvalues[1], 0.0};
        };
        const DegeneracyLevel coarse{n, sr.eigenvalues[0], sr.eigenvalues[1], 0.0};
        const DegeneracyReport d = degeneracy_from_levels(coarse, level(g->second));
        doc["degeneracy"] = Json{{"verdict", to_string(d.verdict)},
                                 {"gap_coarse", json_number(d.coarse.gap)},
                                 {"gap_fine", json_number(d.fine.gap)},
                                 {"refinement_ratio", json_number(d.refinement_ratio)},
                                 {"discretization_error_estimate", json_number(d.discretization_error_estimate)}};
        log << "degeneracy: " << to_string(d.verdict) << '\n';
    }

    for (std::size_t i = 0; i < sr.eigenvalues.size(); ++i)
        log << "lambda" << i + 1 << " = " << format12(sr.eigenvalues[i]) << '\n';
    deliver(cfg, cfg.output.format == "csv" ? spectrum_csv(sr.eigenvalues, sr.residuals) : doc.dump(2) + "\n", out);
    return ExitOk;
}

inline int run_verify(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const std::vector<Scenario> scenarios = scenarios_from_config(cfg);
    const std::vector<VerificationReport> reports = run_scenarios(scenarios);
    bool ok = true;
    for (const auto& r : reports) {
        for (const auto& c : r.checks)
            log << (c.passed ? "PASS " : "FAIL ") << r.scenario << " :: " << c.name << " = " << format12(c.measured)
                << ' ' << to_string(c.comparison) << ' ' << format12(c.threshold) << '\n';
        if (!r.error.empty()) log << "ERROR " << r.scenario << " :: " << r.error << '\n';
        ok = ok && r.overall();
    }
    deliver(cfg, emit_reports(reports, report_format_from_string(cfg.output.format)), out);
    log << (ok ? "verify: all scenarios passed" : "verify: FAILED") << " (" << reports.size() << " scenarios)\n";
    return ok ? ExitOk : ExitFailure;
}

inline std::string csv_columns(const std::vector<std::pair<std::string, const Json*>>& cols) {
    std::ostringstream os;
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c].first;
    os << '\n';
    const std::size_t rows = cols.empty() ? 0 : cols.front().second->size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << format12(number_from_json((*cols[c].second)[r]));
        os << '\n';
    }
    return os.str();
}

/// Human-readable table on `out`; plot-ready CSV files next to the output stem.
inline int run_report(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    require(!cfg.input.empty(), "report needs an input JSON document");
    Json doc;
    try {
        doc = Json::parse(read_file(cfg.input));
    } catch (const Json::parse_error& e) {
        throw InvalidArgument(std::string("input is not valid JSON: ") + e.what());
    }
    const std::string stem = cfg.output.path.empty() ? "report" : cfg.output.path;
    const std::string schema = doc.value("schema", std::string{});
    if (schema == report_schema) {
        const auto reports = reports_from_json(doc);
        for (const auto& r : reports) {
            out << (r.overall() ? "[pass] " : "[FAIL] ") << r.scenario << "  (" << r.section << ", expected "
                << r.expected << ")\n";
            for (const auto& c : r.checks)
                out << "    " << c.name << "  " << format12(c.measured) << ' ' << to_string(c.comparison) << ' '
                    << format12(c.threshold) << "  " << (c.passed ? "pass" : "FAIL") << '\n';
            if (!r.error.empty()) out << "    error: " << r.error << '\n';
        }
        write_file(stem + ".csv", to_csv(reports));
        log << "wrote " << stem << ".csv\n";
        return ExitOk;
    }
    if (schema == solve_schema) {
        out << doc.at("command").get<std::string>() << ": " << doc.at("problem").dump() << '\n';
        const Json& ev = doc.at("eigenvalues");
        for (std::size_t i = 0; i < ev.size(); ++i) out << "    lambda" << i + 1 << "  " << format12(number_from_json(ev[i])) << '\n';
        write_file(stem + "_eigenvalues.csv", csv_columns({{"eigenvalue", &ev}, {"residual", &doc.at("residuals")}}));
        log << "wrote " << stem << "_eigenvalues.csv\n";
        if (doc.contains("density")) {
            write_file(stem + "_density.csv",
                       csv_columns({{"x", &doc["density"]["x"]}, {"rho", &doc["density"]["rho"]}}));
            log << "wrote " << stem << "_density.csv\n";
        }
        if (doc.contains("ground_state")) {
            write_file(stem + "_ground_state.csv",
                       csv_columns({{"x", &doc["ground_state"]["x"]}, {"psi", &doc["ground_state"]["psi"]}}));
            log << "wrote " << stem << "_ground_state.csv\n";
        }
        if (doc.contains("simplex_sample")) {
            const Json& s = doc["simplex_sample"];
            std::ostringstream os;
            const std::size_t dim = s["points"].empty() ? 0 : s["points"][0].size();
            for (std::size_t k = 0; k < dim; ++k) os << 'x' << k + 1 << ',';
            os << "value,tag\n";
            for (std::size_t i = 0; i < s["points"].size(); ++i) {
                for (const auto& c : s["points"][i]) os << format12(number_from_json(c)) << ',';
                os << format12(number_from_json(s["values"][i])) << ',' << s["tags"][i].get<std::string>() << '\n';
            }
            write_file(stem + "_simplex.csv", os.str());
            log << "wrote " << stem << "_simplex.csv\n";
        }
        return ExitOk;
    }
    throw InvalidArgument("input is neither a verification report nor a solve result");
}

}  // namespace detail

/// Runs a parsed configuration. Library errors become exit status 2.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::ostream& log = cfg.output.path.empty() ? err : out;
    try {
        switch (cfg.command) {
            case Command::SolveSingle: return detail::run_solve_single(cfg, out, log);
            case Command::SolveMany: return detail::run_solve_many(cfg, out, log);
            case Command::Verify: return detail::run_verify(cfg, out, log);
            case Command::Report: return detail::run_report(cfg, out, err);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return ExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return ExitFailure;
    }
    return ExitFailure;
}

}  // namespace fermigate
