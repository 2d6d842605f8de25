#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ksflow/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Radial chemotaxis flows through the mass-accumulation transform"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<int> workers;

    auto add_common = [&](CLI::App* cmd, bool with_workers) {
        cmd->add_option("--config", config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory for artifacts");
        if (with_workers)
            cmd->add_option("--workers", workers, "worker threads (default: KSFLOW_WORKERS or 1)");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "integrate one configuration");
    add_common(simulate, false);
    CLI::App* threshold =
        app.add_subcommand("threshold", "compute the concentration threshold certificate");
    add_common(threshold, false);
    CLI::App* verify = app.add_subcommand("verify", "run structural checks on a trajectory");
    add_common(verify, false);
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    add_common(sweep, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : ksflow::cli::exit_config;
    }

    return ksflow::cli::guarded([&]() {
        if (simulate->parsed()) return ksflow::cli::run_simulate(config_path, out_dir);
        if (threshold->parsed()) return ksflow::cli::run_threshold(config_path, out_dir);
        if (verify->parsed()) return ksflow::cli::run_verify(config_path, out_dir);
        return ksflow::cli::run_sweep_cmd(config_path, out_dir, workers);
    });
}
