#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "config.hpp"
#include "experiments.hpp"
#include "svpde/parallel.hpp"
#include "svpde/version.hpp"

using namespace svpde;

namespace {

constexpr int kPass = 0;
constexpr int kToleranceFailure = 1;
constexpr int kUsageError = 2;

int run(const std::string& path, const std::optional<std::uint64_t>& seed, int threads, const std::string& out,
        const std::string& usage) {
    cli::ExperimentConfig config;
    try {
        config = cli::ExperimentConfig::load(path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << usage;
        return kUsageError;
    }
    if (seed) config.set_seed(*seed);
    if (threads > 0) config.set_threads(threads);
    if (!out.empty()) config.set_out_dir(out);
    set_threads(config.threads());

    const auto start = std::chrono::steady_clock::now();
    cli::RunSummary summary;
    try {
        summary = cli::run_experiment(config);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return kToleranceFailure;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    try {
        cli::write_artifacts(summary, config.out_dir());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }

    std::printf("%s  seed %llu  threads %d  wall-clock %.2f s\n", summary.experiment.c_str(),
                static_cast<unsigned long long>(summary.seed), max_threads(), seconds);
    for (const auto& m : summary.metrics)
        std::printf("  %s %-34s %s\n", m.pass ? "ok  " : "FAIL", m.name.c_str(), m.describe().c_str());
    std::printf("artifacts in %s\n", config.out_dir().c_str());

    const auto failures = summary.failures();
    if (failures.empty()) return kPass;
    std::fprintf(stderr, "%zu tolerance failure(s):\n", failures.size());
    for (const auto* m : failures) std::fprintf(stderr, "  %s: %s\n", m->name.c_str(), m->describe().c_str());
    return kToleranceFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strong-viscosity PDE / PPDE experiment runner", "svpde"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out;
    app.add_option("--seed", seed, "Override the config seed");
    app.add_option("--threads", threads, "Worker count (0: runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out, "Output directory (default: config 'out' or results/<experiment>)");

    auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
    std::string config_path;
    run_cmd->add_option("config", config_path, "Config file (key = value lines, [section] headers)")->required();

    auto* list_cmd = app.add_subcommand("list", "List the available experiments");
    bool as_json = false;
    list_cmd->add_flag("--json", as_json, "Machine-readable catalog");
    run_cmd->fallthrough();
    list_cmd->fallthrough();
    const std::string usage = app.help();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << usage;
        return kUsageError;
    }

    if (list_cmd->parsed()) {
        std::cout << (as_json ? cli::catalog_json() : cli::catalog_text());
        return kPass;
    }
    return run(config_path, seed, threads, out, usage);
}
