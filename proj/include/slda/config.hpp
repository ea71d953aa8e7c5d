#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace slda::cli {

enum class Kind { fit, simulate, concentration, slow_rate, fast_rate, re_constant, certify, classify };

const char* kind_name(Kind kind);

struct SolverConfig {
    double tolerance = 1e-9;
    int max_iterations = 100000;
    std::string algorithm = "bcd"; // bcd | pg
    bool standardize = false;
};

// One experiment description, read from a key/value file with [section]
// blocks. Paths are resolved against the config file's directory, so a
// written manifest revalidates from anywhere.
struct ExperimentConfig {
    Kind kind = Kind::fit;
    std::string model_path;
    std::vector<int> n_grid;
    int reps = 0;
    double eta = 0.05;
    bool calibrate_c = true;
    double c_value = 0.0;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string output_dir;
    int threads = 0;
    SolverConfig solver;

    // kind = fit
    std::string fit_design;
    std::string fit_response;
    std::string fit_labels;
    std::string fit_lambda = "max"; // "max" or a number

    // kind = simulate
    int simulate_n = 0;

    // kind = fast-rate
    int fast_s = 0;

    // kind = re-constant
    std::string re_q;               // CSV path, or "sigma-half" for the model
    int re_s = 1;
    double re_c = 3.0;
    int re_classes = 2;
    std::string re_method = "auto"; // auto | exhaustive | sampled

    // kind = certify
    int certify_n = 0;
    double certify_multiplier = 2.5;
    bool certify_sparsity = true;

    // kind = classify
    int classify_train = 0;
    int classify_test = 0;
    std::string classify_lambda = "theoretical"; // "theoretical" or a number

    std::string source_path;
};

// throws ConfigError on syntax problems or unknown keys
ExperimentConfig parse_config(const std::string& path);

// semantic diagnostics; an empty list means the config can run
std::vector<std::string> validate_config(const ExperimentConfig& config);

// serializes the (resolved) config; the result parses and validates again
void write_manifest(const ExperimentConfig& config, const std::string& path);

// Runs the experiment, writing CSV reports, a manifest echoing the fully
// resolved configuration and a human-readable summary into the output
// directory. Throws CertificateViolation when a bound that must hold was
// violated (after the reports are written).
void run_experiment(const ExperimentConfig& config, bool quiet);

} // namespace slda::cli
