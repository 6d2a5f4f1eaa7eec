#include "scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"nlflow: nonlocal transport with influx control"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    nlflow::cli::Overrides overrides;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "solve the characteristic problem and write trajectory CSVs"},
        {"optimize", "minimize the demand-tracking cost over grid controls"},
        {"transfer", "closed-form equilibrium transfer and its diagnostics"},
        {"verify", "lower-bound certificate for a boundary-density control"},
        {"crosscheck", "characteristic vs finite-volume refinement study"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "scenario file (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory")->capture_default_str();
        sub->add_option("--seed", overrides.seed, "random seed for restarts");
        sub->add_option("--cells", overrides.cells, "grid size override");
        sub->add_option("--tol", overrides.tol, "fixed-point tolerance override");
    }
    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    return nlflow::cli::run(nlflow::cli::parse_command(name), config, out, overrides, std::cerr);
}
