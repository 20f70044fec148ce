// fermigate command-line front end: solve-single, solve-many, verify, report.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "fermigate/cli.hpp"

namespace {

struct Flags {
    std::string config;
    fermigate::CliOverrides o;
};

void add_common(CLI::App* sub, Flags& f, bool with_scenarios, bool with_grids) {
    sub->add_option("--config", f.config, "YAML run configuration");
    sub->add_option("--out", f.o.out, "output path (default: standard output)");
    sub->add_option("--format", f.o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", f.o.seed, "random seed for the structural checks");
    if (with_scenarios) sub->add_option("--scenario", f.o.scenarios, "scenario name or kind (repeatable)");
    if (with_grids) sub->add_option("--grids", f.o.grids, "coarse and fine grid, \"n,2n\"");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Galerkin spectra and verification for one-dimensional fermions"};
    app.require_subcommand(1);
    Flags f;
    auto* single = app.add_subcommand("solve-single", "single-particle eigenpairs");
    auto* many = app.add_subcommand("solve-many", "many-body eigenpairs, density and simplex samples");
    auto* verify = app.add_subcommand("verify", "run verification scenarios");
    auto* report = app.add_subcommand("report", "tabulate a JSON result and write plot CSVs");
    add_common(single, f, false, true);
    add_common(many, f, false, true);
    add_common(verify, f, true, true);
    add_common(report, f, false, false);
    std::string input;
    report->add_option("input", input, "JSON document from solve-* or verify")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : fermigate::ExitConfig;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const auto command = *fermigate::command_from_string(sub->get_name());
    if (!input.empty()) f.o.input = input;

    fermigate::RunConfig cfg;
    try {
        if (!f.config.empty()) {
            cfg = fermigate::parse_config(fermigate::read_file(f.config));
            if (cfg.command != command)
                throw fermigate::ConfigError("command", "config is for '" + fermigate::to_string(cfg.command) +
                                                            "' but the subcommand is '" + sub->get_name() + "'");
        } else {
            cfg.command = command;
            if (command == fermigate::Command::SolveSingle || command == fermigate::Command::SolveMany)
                throw fermigate::ConfigError("problem", "solve commands need --config with a problem section");
        }
        fermigate::apply_overrides(cfg, f.o);
    } catch (const fermigate::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return fermigate::ExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return fermigate::ExitConfig;
    }
    return fermigate::run(cfg);
}
