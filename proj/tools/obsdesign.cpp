#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "obsdesign/cli.hpp"

namespace {

std::optional<std::filesystem::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stratified experiment design from an observational pilot study"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("obsdesign ") + obsdesign::kToolVersion);

    std::string data, strata, config, out, spec, regions, rects, benchmark;
    obsdesign::CliOverrides ov;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out, "output directory")->required();
        cmd->add_option("--seed", ov.seed, "override the config seed");
        cmd->add_option("--gamma", ov.gamma, "override the config gamma");
        cmd->add_option("--threads", ov.threads, "worker threads")->check(CLI::PositiveNumber);
    };

    CLI::App* bounds = app.add_subcommand("bounds", "bootstrap confidence regions for stratum variances");
    bounds->add_option("--data", data, "dataset CSV")->required();
    bounds->add_option("--strata", strata, "stratum weights CSV");
    bounds->add_option("--config", config, "design config file")->required();
    add_common(bounds);

    CLI::App* design = app.add_subcommand("design", "regret-minimizing allocation");
    design->add_option("--data", data, "dataset CSV")->required();
    design->add_option("--strata", strata, "stratum weights CSV");
    design->add_option("--config", config, "design config file")->required();
    add_common(design);

    CLI::App* simulate = app.add_subcommand("simulate", "benchmark designs on synthetic data");
    simulate->add_option("--spec", spec, "synthetic population spec JSON")->required();
    simulate->add_option("--config", config, "design config file")->required();
    add_common(simulate);

    CLI::App* report = app.add_subcommand("report", "render SVG plots from saved artifacts");
    report->add_option("--regions", regions, "regions JSON from bounds")->required();
    report->add_option("--rects", rects, "rectangle CSV from bounds")->required();
    report->add_option("--benchmark", benchmark, "benchmark CSV from simulate");
    report->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (bounds->parsed())
            return obsdesign::run_bounds(data, opt_path(strata), config, out, ov);
        if (design->parsed())
            return obsdesign::run_design(data, opt_path(strata), config, out, ov);
        if (simulate->parsed()) return obsdesign::run_simulate(spec, config, out, ov);
        if (report->parsed())
            return obsdesign::run_report(regions, rects, opt_path(benchmark), out);
    } catch (const obsdesign::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const obsdesign::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
