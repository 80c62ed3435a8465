#include "config.hpp"

#include <geolp/error.hpp>
#include <geolp/runner.hpp>

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"geolp: Littlewood-Paley estimates on null hypersurfaces"};
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs,-j", jobs, "Number of checks to run concurrently")->check(CLI::PositiveNumber);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the checks listed in a YAML configuration");
    run->add_option("config", config_path, "Path to the configuration file")->required();
    auto* list = app.add_subcommand("list", "Print the check catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    if (*list) {
        for (const auto& c : geolp::check_catalog()) {
            std::cout << std::left << std::setw(28) << c.id << std::setw(18) << c.module << c.anchor << '\n';
        }
        return 0;
    }

    try {
        const geolp::RunConfig cfg = geolp::cli::load_config(config_path);
        const auto dir = geolp::output_directory(cfg);
        std::cout << "config " << cfg.hash() << " -> " << dir.string() << '\n';
        const geolp::RunSummary summary = geolp::run_suites(cfg, jobs, std::cout);
        geolp::write_outputs(summary, cfg, dir);
        const int code = summary.exit_code();
        std::cout << (code == 0 ? "all checks passed" : "some checks failed") << " in "
                  << geolp::format_double(std::round(summary.seconds)) << " s\n";
        return code;
    } catch (const geolp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
