// sublim: sublinear expectations, capacities and the G-CLT from the command line.
//
//   sublim expect  <config.json>   upper expectation / capacity report (JSON)
//   sublim clt     <config.json>   convergence table (CSV)
//   sublim pde     <config.json>   G-heat snapshots (TSV) + manifest (JSON)
//   sublim compare <config.json>   DP vs PDE table (CSV) + log-log plot data (TSV)
//   sublim check   <config.json>   property suites; exit 1 on any violation

#include "sublim/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"sublinear expectations, Choquet capacities and the G-normal CLT"};
    app.require_subcommand(1);

    std::string config_path;
    const std::pair<const char*, const char*> commands[] = {
        {"expect", "upper expectation, capacities and tightness (JSON)"},
        {"clt", "convergence table of E^[phi(S_n/sqrt(n))] (CSV)"},
        {"pde", "solve the G-heat / G-HJB equation (TSV snapshots + JSON manifest)"},
        {"compare", "DP value against the G-normal PDE reference (CSV + plot TSV)"},
        {"check", "run the property suites; exit 1 on any violation"},
    };
    for (const auto& [name, help] : commands)
        app.add_subcommand(name, help)->add_option("config", config_path, "JSON configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sublim::exit_config;
    }

    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "config error: cannot open " << config_path << '\n';
        return sublim::exit_config;
    }
    std::ostringstream text;
    text << in.rdbuf();

    const std::string command = app.get_subcommands().front()->get_name();
    return sublim::run_command(command, text.str(), std::cout, std::cerr);
}
