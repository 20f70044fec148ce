#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fermigate/cli.hpp"

using namespace fermigate;

namespace {

ConfigError config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return ConfigError("", "");
}

VerificationReport sample_report() {
    VerificationReport r;
    r.scenario = "demo/one";
    r.kind = "free_spectrum";
    r.section = "single-particle";
    r.add(make_check("lambda1", std::numbers::pi * std::numbers::pi, 9.87, Comparison::LessEqual, "with, comma"));
    r.add(make_check("ratio", 0.25, 0.5, Comparison::LessEqual));
    r.add(make_check("nan", std::nan(""), 0.0, Comparison::Record, "quote \" inside"));
    r.add(make_check("big", HUGE_VAL, 1e-300, Comparison::Greater));
    r.env("grid", 40.0);
    return r;
}

}  // namespace

TEST(Config, MinimalSolveSingleGetsDefaults) {
    const RunConfig c = parse_config("command: solve-single\nproblem:\n  bc: dirichlet\n  n_cells: 200\n");
    EXPECT_EQ(c.command, Command::SolveSingle);
    EXPECT_EQ(c.problem.k, 6u);
    EXPECT_EQ(c.problem.n_particles, 1u);
    EXPECT_EQ(*c.problem.n_cells, 200u);
    EXPECT_EQ(c.problem.bc.kind, BoundarySpec::Kind::DirichletBoth);
    EXPECT_TRUE(c.problem.v.is_free());
    EXPECT_EQ(c.output.format, "json");
    EXPECT_TRUE(c.output.path.empty());
    EXPECT_FALSE(c.seed.has_value());
    EXPECT_EQ(c.grid_pair(), (std::pair<std::size_t, std::size_t>{200, 400}));
}

TEST(Config, ZeroAlphaIsRejected) {
    const ConfigError e = config_error("command: solve-single\nproblem:\n  bc: quasiperiodic\n  alpha: 0\n  n_cells: 20\n");
    EXPECT_EQ(e.key(), "problem.alpha");
    EXPECT_NE(std::string(e.what()).find("alpha must be nonzero"), std::string::npos);
    EXPECT_EQ(e.line(), 4);
}

TEST(Config, UnknownKeysAreRejectedWithPosition) {
    const ConfigError e = config_error("command: verify\nproblem:\n  bc: dirichlet\n  n_cels: 20\n");
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("n_cels"), std::string::npos);
    EXPECT_EQ(config_error("command: verify\nextra: 1\n").line(), 2);
    config_error("command: verify\nproblem:\n  potential: {type: delta, x0: 0.5, strength: 1, width: 2}\n");
}

TEST(Config, TypeMismatchesNameExpectedType) {
    const ConfigError e = config_error("command: solve-many\nproblem:\n  n_cells: many\n");
    EXPECT_EQ(e.key(), "problem.n_cells");
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("integer"), std::string::npos);
    config_error("command: verify\nsolver:\n  target_rel_tol: -1\n");
    config_error("command: solve-single\nproblem: {bc: dirichlet, n_cells: 3}\n");
    config_error("command: solve-single\nproblem: {bc: dirichlet, n_cells: 20, N: 2}\n");
    config_error("command: solve-many\n");
    config_error("command: fly\n");
    config_error("command: verify\noutput: {format: xml}\n");
    config_error("command: solve-single\nproblem: {bc: line, line: [0, 0], n_cells: 20}\n");
    config_error("command: solve-many\nproblem: {grids: [20, 30]}\n");
    config_error("command: [\n");
}

TEST(Config, FullProblemSection) {
    const RunConfig c = parse_config(R"(schema: fermigate-config/1
command: solve-many
problem:
  bc: quasiperiodic
  alpha: -1
  grids: [20, 40]
  N: 3
  k: 4
  potential: {type: sampled, profile: ramp, scale: 5}
  interaction: {type: kernel, profile: gaussian, scale: 2}
output: {path: out.json, format: csv}
seed: 11
solver: {dense_limit: 100, slater_cap: 5000}
)");
    EXPECT_EQ(c.problem.bc.kind, BoundarySpec::Kind::QuasiPeriodic);
    EXPECT_EQ(c.problem.bc.alpha, -1.0);
    EXPECT_EQ(c.problem.n_particles, 3u);
    EXPECT_EQ(c.problem.k, 4u);
    EXPECT_EQ(c.problem.v.profile, "ramp");
    EXPECT_EQ(c.problem.v.scale, 5.0);
    EXPECT_EQ(c.problem.w.profile, "gaussian");
    EXPECT_EQ(c.output.format, "csv");
    EXPECT_EQ(*c.seed, 11u);
    EXPECT_EQ(c.mb_solver.dense_limit, 100u);
    EXPECT_EQ(c.slater_cap, 5000u);
    EXPECT_EQ(c.grid_pair(), (std::pair<std::size_t, std::size_t>{20, 40}));
}

TEST(Config, NonlocalScenarioGetsParityExpectation) {
    const RunConfig c = parse_config(R"(command: verify
problem: {bc: quasiperiodic, alpha: 1, N: 2, grids: [20, 40]}
verify: {scenario: nondegeneracy_nonlocal}
)");
    const auto s = scenarios_from_config(c);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].kind, ScenarioKind::NondegeneracyNonlocal);
    EXPECT_EQ(s[0].expected, Expectation::NegativeControl);
    EXPECT_EQ(s[0].grids, (std::pair<std::size_t, std::size_t>{20, 40}));

    const RunConfig three = parse_config(R"(command: verify
problem: {bc: quasiperiodic, alpha: 1, N: 3, grids: [20, 40]}
verify: {scenario: nondegeneracy_nonlocal}
)");
    EXPECT_EQ(scenarios_from_config(three)[0].expected, Expectation::Pass);
}

TEST(Config, ScenarioSelection) {
    RunConfig c = parse_config("command: verify\nseed: 3\nverify: {scenarios: [parity/]}\n");
    const auto s = scenarios_from_config(c);
    EXPECT_GE(s.size(), 4u);
    for (const auto& x : s) {
        EXPECT_EQ(x.name.rfind("parity/", 0), 0u);
        EXPECT_EQ(x.seed, 3u);
    }
    EXPECT_EQ(scenarios_from_config(parse_config("command: verify\n")).size(), default_manifest().size());
    c.verify.scenarios = {"nope"};
    EXPECT_THROW(scenarios_from_config(c), ConfigError);
    c = parse_config("command: verify\nverify: {scenario: free_spectrum/dirichlet, tolerances: {volume_sigma: 2}}\n");
    EXPECT_THROW(scenarios_from_config(c), ConfigError);
}

TEST(Config, OverridesAndGrids) {
    RunConfig c = parse_config("command: verify\n");
    CliOverrides o;
    o.format = "csv";
    o.grids = "10,20";
    o.scenarios = {"free_spectrum/dirichlet"};
    apply_overrides(c, o);
    EXPECT_EQ(c.output.format, "csv");
    EXPECT_EQ(c.grid_pair(), (std::pair<std::size_t, std::size_t>{10, 20}));
    EXPECT_EQ(c.verify.scenarios.size(), 1u);
    EXPECT_THROW(parse_grids("10,30"), ConfigError);
    EXPECT_THROW(parse_grids("ten,20"), ConfigError);
    EXPECT_THROW(parse_grids("10"), ConfigError);
    o.format = "xml";
    EXPECT_THROW(apply_overrides(c, o), ConfigError);
}

TEST(Report, EmptyReportIsFlagged) {
    const VerificationReport r;
    const Json j = Json::parse(emit_report(r, ReportFormat::Json));
    EXPECT_EQ(j["schema"], report_schema);
    EXPECT_EQ(j["overall"], "pass");
    EXPECT_EQ(j["flags"], Json::array({"no-checks"}));
    const Json& inner = j["sections"].begin().value()[0];
    EXPECT_EQ(inner["overall"], "pass");
    EXPECT_EQ(inner["flags"], Json::array({"no-checks"}));
}

TEST(Report, JsonRoundTrip) {
    const std::vector<VerificationReport> in{sample_report(), VerificationReport{}};
    const std::string text = emit_reports(in, ReportFormat::Json);
    const auto out = parse_reports(text);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], in[0]);
    EXPECT_EQ(out[1], in[1]);
    EXPECT_EQ(emit_reports(out, ReportFormat::Json), text);
    EXPECT_THROW(parse_reports("{"), InvalidArgument);
    EXPECT_THROW(parse_reports("{\"schema\": \"other\"}"), InvalidArgument);
}

TEST(Report, StableKeyOrderAndTwelveDigits) {
    const Json j = Json::parse(emit_report(sample_report(), ReportFormat::Json));
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"schema", "manifest", "overall", "summary", "flags", "sections"}));
    const Json& c = j["sections"]["single-particle"][0]["checks"][0];
    EXPECT_EQ(c["measured"].get<double>(), 9.86960440109);
    EXPECT_EQ(c["verdict"], "pass");
    EXPECT_EQ(j["sections"]["single-particle"][0]["checks"][2]["measured"], "nan");
    EXPECT_EQ(j["sections"]["single-particle"][0]["checks"][3]["measured"], "inf");
}

TEST(Report, CsvHasHeaderAndOneRowPerCheck) {
    VerificationReport broken;
    broken.scenario = "x";
    broken.section = "s";
    broken.error = "solver failed";
    const std::string csv = emit_reports({sample_report(), broken}, ReportFormat::Csv);
    std::istringstream in(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 1u + 4u + 1u);
    EXPECT_EQ(lines[0], "section,scenario,check,measured,threshold,comparison,verdict,note");
    EXPECT_EQ(lines[1], "single-particle,demo/one,lambda1,9.86960440109,9.87,<=,pass,\"with, comma\"");
    EXPECT_EQ(lines[3], "single-particle,demo/one,nan,nan,0,record,pass,\"quote \"\" inside\"");
    EXPECT_EQ(lines[5], "s,x,error,,,,fail,solver failed");
}

TEST(Report, RepeatedRunsAreByteIdentical) {
    const auto s = find_scenario("structural/N2");
    ASSERT_TRUE(s.has_value());
    const std::string a = emit_report(run_scenario(*s), ReportFormat::Json);
    const std::string b = emit_report(run_scenario(*s), ReportFormat::Json);
    EXPECT_EQ(a, b);
}

TEST(Cli, RunStatuses) {
    RunConfig ok = parse_config(R"(command: solve-many
problem: {bc: dirichlet, n_cells: 24, N: 2, k: 3}
output: {format: csv}
)");
    std::ostringstream out, err;
    EXPECT_EQ(run(ok, out, err), ExitOk);
    std::istringstream rows(out.str());
    std::string header, first;
    std::getline(rows, header);
    std::getline(rows, first);
    EXPECT_EQ(header, "index,eigenvalue,residual");
    const double l1 = std::stod(first.substr(2, first.find(',', 2) - 2));
    EXPECT_NEAR(l1, 49.35, 0.02 * 49.35);

    RunConfig strict = parse_config(R"(command: verify
problem: {bc: dirichlet, N: 1, grids: [20, 40], k: 3}
verify: {scenario: free_spectrum, tolerances: {rel_err: 1e-12}}
)");
    std::ostringstream o2, e2;
    EXPECT_EQ(run(strict, o2, e2), ExitFailure);
    EXPECT_NE(e2.str().find("FAIL "), std::string::npos);
    EXPECT_EQ(Json::parse(o2.str())["overall"], "fail");

    RunConfig report = parse_config("command: report\n");
    std::ostringstream o3, e3;
    EXPECT_EQ(run(report, o3, e3), ExitFailure);
}
