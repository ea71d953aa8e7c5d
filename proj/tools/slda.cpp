// Command-line front end: runs fits, data generation and the verification
// experiments from config files, emitting CSV reports.

#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <string>

#include "slda/config.hpp"
#include "slda/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCertificate = 3;
constexpr int kExitIo = 4;

int run(const std::string& config_path, int threads, const std::string& output, bool quiet) {
    try {
        slda::cli::ExperimentConfig config = slda::cli::parse_config(config_path);
        if (threads >= 0) config.threads = threads;
        if (!output.empty()) config.output_dir = output;
        slda::cli::run_experiment(config, quiet);
        return kExitOk;
    } catch (const slda::ConfigError& error) {
        std::cerr << "config error: " << error.what() << "\n";
        return kExitConfig;
    } catch (const slda::CertificateViolation& error) {
        std::cerr << "certificate violation: " << error.what() << "\n";
        return kExitCertificate;
    } catch (const slda::IoError& error) {
        std::cerr << "io error: " << error.what() << "\n";
        return kExitIo;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitError;
    }
}

int validate(const std::string& config_path) {
    try {
        const slda::cli::ExperimentConfig config = slda::cli::parse_config(config_path);
        const std::vector<std::string> issues = slda::cli::validate_config(config);
        if (issues.empty()) {
            std::cout << "ok\n";
            return kExitOk;
        }
        for (const std::string& issue : issues) std::cout << issue << "\n";
        return kExitConfig;
    } catch (const slda::ConfigError& error) {
        std::cerr << "config error: " << error.what() << "\n";
        return kExitConfig;
    } catch (const slda::IoError& error) {
        std::cerr << "io error: " << error.what() << "\n";
        return kExitIo;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitError;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse multi-class discriminant analysis via penalized optimal scoring"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = -1;
    std::string output;
    bool quiet = false;

    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment described by a config file");
    run_cmd->add_option("config", config_path, "config file")->required();
    run_cmd->add_option("--threads", threads, "worker threads (0 = machine parallelism)");
    run_cmd->add_option("--output", output, "output directory (overrides the config)");
    run_cmd->add_flag("--quiet", quiet, "suppress the summary on stdout");

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "list every constraint violation without running");
    validate_cmd->add_option("config", config_path, "config file")->required();

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(run_cmd)) return run(config_path, threads, output, quiet);
    return validate(config_path);
}
