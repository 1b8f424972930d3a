#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mcf/commands.hpp"
#include "mcf/config.hpp"

namespace {

bool slurp(const std::string& path, std::string& text) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    std::stringstream ss;
    ss << is.rdbuf();
    text = ss.str();
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean curvature flow lab: run scenarios, analyze densities, summarize reports"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Evolve a configured scenario and write its trajectory");
    run->add_option("config", config_path, "Run configuration (JSON)")->required();

    std::string dir, analysis_path;
    auto* analyze = app.add_subcommand("analyze", "Gaussian density, rescaling and regularity verdict");
    analyze->add_option("dir", dir, "Run output directory")->required();
    analyze->add_option("analysis", analysis_path, "Analysis specification (JSON)")->required();

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Summarize a run directory");
    report->add_option("dir", report_dir, "Run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mcf::kExitUsage;
    }

    try {
        if (*run) {
            std::string text;
            if (!slurp(config_path, text)) {
                std::cerr << "cannot read " << config_path << '\n';
                return mcf::kExitUsage;
            }
            const mcf::RunConfig cfg = mcf::parse_config(text);
            const std::string stem = std::filesystem::path(config_path).stem().string();
            return mcf::cmd_run(cfg, stem, std::cout, std::cerr);
        }
        if (*analyze) {
            std::string text;
            if (!slurp(analysis_path, text)) {
                std::cerr << "cannot read " << analysis_path << '\n';
                return mcf::kExitUsage;
            }
            return mcf::cmd_analyze(dir, mcf::parse_analysis(text), std::cout, std::cerr);
        }
        return mcf::cmd_report(report_dir, std::cout, std::cerr);
    } catch (const std::exception& e) {
        mcf::write_error(std::cerr, e);
        return mcf::kExitModuleError;
    }
}
