#include <Eigen/Eigenvalues>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "slda/config.hpp"
#include "slda/csv.hpp"
#include "slda/errors.hpp"
#include "slda/parallel.hpp"
#include "slda/population.hpp"
#include "slda/rng.hpp"
#include "slda/scores.hpp"
#include "slda/simulate.hpp"
#include "slda/solver.hpp"
#include "slda/verify.hpp"

namespace slda::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& file) {
    return (fs::path(dir) / file).string();
}

solver::SolverOptions solver_options_from(const SolverConfig& config) {
    solver::SolverOptions options;
    options.tolerance = config.tolerance;
    options.max_iterations = config.max_iterations;
    options.algorithm = config.algorithm == "pg" ? solver::Algorithm::proximal_gradient
                                                 : solver::Algorithm::block_coordinate_descent;
    options.standardize = config.standardize;
    return options;
}

class Summary {
  public:
    Summary(const std::string& path, bool quiet) : out_(path), quiet_(quiet) {
        if (!out_) throw IoError("cannot write summary: " + path);
    }

    template <typename T>
    Summary& operator<<(const T& value) {
        out_ << value;
        if (!quiet_) std::cout << value;
        return *this;
    }

  private:
    std::ofstream out_;
    bool quiet_;
};

void write_scalars(Summary& summary, const verify::ExperimentReport& report) {
    for (const auto& [key, value] : report.scalars) {
        summary << key << " = " << csv::format_double(value) << "\n";
    }
}

// calibration used by the rate experiments when C is not pinned: the
// constant comes from the concentration quantile at the smallest grid point
double resolve_c(const ExperimentConfig& config, const population::PopulationModel& model,
                 Summary& summary) {
    if (!config.calibrate_c) return config.c_value;
    const int n0 = *std::min_element(config.n_grid.begin(), config.n_grid.end());
    const int reps = std::max(100, config.reps);
    const verify::ExperimentReport calibration = verify::concentration_experiment(
        model, {n0}, reps, config.eta, rng::mix64(config.seed ^ 0xCAFEULL), config.threads);
    const double c = calibration.scalars.at("calibrated_c");
    summary << "calibrated C = " << csv::format_double(c) << " (from " << reps
            << " replicates at n = " << n0 << ")\n";
    return c;
}

void run_fit(const ExperimentConfig& config, Summary& summary) {
    const Eigen::MatrixXd design_raw = csv::read_matrix(config.fit_design);
    auto centered = simulate::center_columns(design_raw);
    Eigen::MatrixXd y;
    if (!config.fit_response.empty()) {
        y = csv::read_matrix(config.fit_response);
    } else {
        const std::vector<int> labels = csv::read_labels(config.fit_labels);
        int num_classes = 0;
        for (int label : labels) num_classes = std::max(num_classes, label);
        const scores::ClassIndicator z = scores::indicator_matrix(labels, num_classes);
        y = scores::transformed_response(z, scores::build_score_matrix(z.class_counts));
    }
    const double lambda = config.fit_lambda == "max"
                              ? solver::lambda_max(centered.first, y)
                              : std::stod(config.fit_lambda);
    solver::Problem problem(std::move(centered.first), std::move(y), lambda);
    const solver::FitResult fit = solver::fit(problem, solver_options_from(config.solver));
    csv::write_fit_report(fit, join(config.output_dir, "fit_report.csv"));
    csv::write_matrix(fit.b_hat, join(config.output_dir, "b_hat.csv"));
    summary << "lambda = " << csv::format_double(lambda) << "\n";
    summary << "objective = " << csv::format_double(fit.objective) << "\n";
    summary << "kkt_residual = " << csv::format_double(fit.kkt_residual) << "\n";
    summary << "iterations = " << fit.iterations << "\n";
    summary << "active_rows = " << fit.active_rows.size() << "\n";
    summary << "converged = " << (fit.converged ? "yes" : "no") << "\n";
    if (!fit.converged) throw Error("fit did not converge within the iteration budget");
}

void run_simulate(const ExperimentConfig& config, Summary& summary,
                  const population::PopulationModel& model) {
    const simulate::Dataset data = simulate::sample_dataset(model, config.simulate_n, config.seed);
    csv::write_matrix(data.x, join(config.output_dir, "X.csv"));
    csv::write_labels(data.labels, join(config.output_dir, "labels.csv"));
    csv::write_matrix(data.column_means.transpose(), join(config.output_dir, "column_means.csv"));
    summary << "n = " << config.simulate_n << "\n";
    summary << "p = " << model.dim() << "\n";
    summary << "K = " << model.num_classes() << "\n";
    summary << "seed = " << config.seed << "\n";
    summary << "model = " << config.model_path << "\n";
}

void run_concentration(const ExperimentConfig& config, Summary& summary,
                       const population::PopulationModel& model) {
    verify::ExperimentReport report = verify::concentration_experiment(
        model, config.n_grid, config.reps, config.eta, config.seed, config.threads);
    if (!config.calibrate_c) {
        // coverage of the theoretical threshold with the pinned constant
        const population::PopulationDerived derived = population::derive(model);
        for (int n : config.n_grid) {
            const double threshold = solver::theoretical_lambda(
                derived.tau, model.num_classes(), model.dim(), n, config.eta, config.c_value);
            int covered = 0;
            int total = 0;
            for (const verify::ReplicateRow& row : report.rows) {
                if (row.n != n || row.metric != "xte_inf2") continue;
                ++total;
                if (row.value <= threshold) ++covered;
            }
            report.scalars["coverage_at_n" + std::to_string(n)] =
                total > 0 ? static_cast<double>(covered) / total : 0.0;
        }
    }
    csv::write_report(report, join(config.output_dir, "report.csv"));
    csv::write_summary(report, join(config.output_dir, "summary.csv"));
    write_scalars(summary, report);
}

void run_rate(const ExperimentConfig& config, Summary& summary,
              const population::PopulationModel& model) {
    const double c = resolve_c(config, model, summary);
    verify::ExperimentReport report =
        config.kind == Kind::slow_rate
            ? verify::slow_rate_experiment(model, config.n_grid, config.reps, c, config.seed,
                                           config.eta, config.threads)
            : verify::fast_rate_experiment(model, config.n_grid, config.reps, c, config.seed,
                                           config.fast_s, config.eta, config.threads);
    csv::write_report(report, join(config.output_dir, "report.csv"));
    csv::write_summary(report, join(config.output_dir, "summary.csv"));
    write_scalars(summary, report);
}

void run_re_constant(const ExperimentConfig& config, Summary& summary,
                     const population::PopulationModel& model) {
    Eigen::MatrixXd q;
    if (config.re_q == "sigma-half") {
        const Eigen::MatrixXd sigma_t = population::total_covariance(model);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_t);
        q = eig.operatorSqrt();
    } else {
        q = csv::read_matrix(config.re_q);
    }
    verify::REOptions options;
    options.seed = config.seed;
    if (config.re_method == "exhaustive") options.method = verify::REMethod::exhaustive_supports;
    if (config.re_method == "sampled") options.method = verify::REMethod::sampled_cone;
    const verify::REReport report =
        verify::re_constant(q, config.re_s, config.re_c, config.re_classes, options);
    std::ofstream out(join(config.output_dir, "re_report.csv"));
    if (!out) throw IoError("cannot write re_report.csv");
    out << "s,c,K,gamma,method,certified,supports_probed\n";
    out << report.s << ',' << csv::format_double(report.c) << ',' << report.num_classes << ','
        << csv::format_double(report.gamma_estimate) << ','
        << (report.method == verify::REMethod::exhaustive_supports ? "exhaustive-supports"
                                                                   : "sampled-cone")
        << ',' << (report.certified ? 1 : 0) << ',' << report.supports_probed << "\n";
    summary << "gamma_estimate = " << csv::format_double(report.gamma_estimate)
            << " (lower bound; method "
            << (report.method == verify::REMethod::exhaustive_supports ? "exhaustive-supports"
                                                                       : "sampled-cone")
            << ", " << report.supports_probed << " supports)\n";
}

// returns the name of the first violated bound, if any; the caller raises
// the error only after the manifest is on disk
std::optional<std::string> run_certify(const ExperimentConfig& config, Summary& summary,
                                       const population::PopulationModel& model) {
    verify::CertifyOptions options;
    options.lambda_multiplier = config.certify_multiplier;
    options.sparsity_bounds = config.certify_sparsity;
    options.threads = config.threads;
    options.re.seed = config.seed;
    const verify::CertifyResult result =
        verify::certify_experiment(model, config.certify_n, config.reps, config.seed, options);
    csv::write_certificates(result.certificates, join(config.output_dir, "certificates.csv"));
    summary << "replicates = " << result.replicates << "\n";
    summary << "certificates = " << result.certificates.size() << "\n";
    summary << "hypothesis_failures = " << result.hypothesis_failures << "\n";
    summary << "violations = " << result.violations << "\n";
    for (const verify::BoundCertificate& cert : result.certificates) {
        if (cert.hypothesis_met && !cert.holds) return cert.name;
    }
    return std::nullopt;
}

void run_classify(const ExperimentConfig& config, Summary& summary,
                  const population::PopulationModel& model) {
    const population::PopulationDerived derived = population::derive(model);
    const simulate::Dataset train =
        simulate::sample_dataset(model, config.classify_train, config.seed, 1);
    double lambda;
    if (config.classify_lambda == "theoretical") {
        const double c = config.calibrate_c ? 2.0 : config.c_value;
        lambda = solver::theoretical_lambda(derived.tau, model.num_classes(), model.dim(),
                                            config.classify_train, config.eta, c);
    } else {
        lambda = std::stod(config.classify_lambda);
    }
    solver::Problem problem(train.x, train.y, lambda);
    const solver::FitResult fit = solver::fit(problem, solver_options_from(config.solver));
    const Eigen::MatrixXd centroids = verify::class_centroids(train, fit.b_hat);

    const simulate::Dataset test =
        simulate::sample_dataset(model, config.classify_test, config.seed, 2);
    // test features are re-shifted to raw coordinates before prediction
    int correct = 0;
    std::vector<int> predicted(static_cast<std::size_t>(config.classify_test));
    for (int i = 0; i < config.classify_test; ++i) {
        const Eigen::VectorXd raw = test.x.row(i).transpose() + test.column_means;
        const int label = verify::classify(raw, fit.b_hat, centroids, train.column_means);
        predicted[static_cast<std::size_t>(i)] = label;
        if (label == test.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    csv::write_labels(predicted, join(config.output_dir, "predicted.csv"));
    summary << "lambda = " << csv::format_double(lambda) << "\n";
    summary << "active_rows = " << fit.active_rows.size() << "\n";
    summary << "accuracy = "
            << csv::format_double(static_cast<double>(correct) / config.classify_test) << "\n";
}

} // namespace

void run_experiment(const ExperimentConfig& config, bool quiet) {
    const std::vector<std::string> issues = validate_config(config);
    if (!issues.empty()) {
        std::string message = "invalid config";
        for (const std::string& issue : issues) message += "\n  " + issue;
        throw ConfigError(message);
    }
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + config.output_dir);

    Summary summary(join(config.output_dir, "summary.txt"), quiet);
    summary << "kind = " << kind_name(config.kind) << "\n";

    population::PopulationModel model;
    const bool needs_model =
        config.kind != Kind::fit && !(config.kind == Kind::re_constant && config.re_q != "sigma-half");
    if (needs_model) model = population::load_model(config.model_path);

    ExperimentConfig resolved = config;
    std::optional<std::string> violated;
    switch (config.kind) {
        case Kind::fit: run_fit(config, summary); break;
        case Kind::simulate: run_simulate(config, summary, model); break;
        case Kind::concentration: run_concentration(config, summary, model); break;
        case Kind::slow_rate:
        case Kind::fast_rate: {
            const double c = resolve_c(config, model, summary);
            resolved.calibrate_c = false;
            resolved.c_value = c;
            run_rate(resolved, summary, model);
            break;
        }
        case Kind::re_constant: run_re_constant(config, summary, model); break;
        case Kind::certify: violated = run_certify(config, summary, model); break;
        case Kind::classify: run_classify(config, summary, model); break;
    }
    write_manifest(resolved, join(config.output_dir, "manifest.cfg"));
    if (violated.has_value()) throw CertificateViolation("bound violated: " + *violated);
}

} // namespace slda::cli
