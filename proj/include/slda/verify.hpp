#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slda/population.hpp"
#include "slda/simulate.hpp"

namespace slda::verify {

// E = Y - X b_star
Eigen::MatrixXd residual_matrix(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                const Eigen::MatrixXd& b_star);

// maximal row Euclidean norm
double inf2_norm(const Eigen::MatrixXd& a);

// trace quadratic form Tr{(b_hat - b_star)' sigma_t (b_hat - b_star)}
double prediction_risk(const Eigen::MatrixXd& b_hat, const Eigen::MatrixXd& b_star,
                       const Eigen::MatrixXd& sigma_t);

// squared Frobenius distance
double estimation_error(const Eigen::MatrixXd& b_hat, const Eigen::MatrixXd& b_star);

// |n^-1 X'X - sigma_t|_inf
double covariance_deviation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& sigma_t);

// sum of row Euclidean norms
double group_norm(const Eigen::MatrixXd& a);

enum class REMethod { exhaustive_supports, sampled_cone };

struct REOptions {
    int restarts = 20;          // projected-gradient starts per support
    int max_iterations = 150;   // gradient steps per start
    int exhaustive_limit = 14;  // largest p for full support enumeration
    int sampled_supports = 200; // supports drawn by the sampled method
    std::optional<REMethod> method; // override the size-based selection
    std::uint64_t seed = 0x9e1;
    // directions whose restricted-norm ratio is probed on every support
    // they are cone-feasible for (the certificate path feeds the realized
    // error direction through this)
    std::vector<Eigen::MatrixXd> extra_probes;
};

struct REReport {
    int s = 0;
    double c = 0.0;
    int num_classes = 0;
    // largest ratio |A_S|_F^2 / |QA|_F^2 found over the probed supports and
    // cone directions; a lower bound on the true constant since the inner
    // minimization may be incomplete
    double gamma_estimate = 0.0;
    REMethod method = REMethod::exhaustive_supports;
    bool certified = false; // true when every support of the given size was probed
    int supports_probed = 0;
};

// Restricted eigenvalue search for a q x p matrix Q over supports of
// cardinality s and directions A with |A_{S^c}|_{1,2} <= c |A_S|_{1,2}.
// The ratio is invariant to support shrinkage, so only maximal supports
// are enumerated. q may exceed p; only Q'Q enters the computation.
REReport re_constant(const Eigen::MatrixXd& q, int s, double c, int num_classes,
                     const REOptions& options = {});

struct BoundCertificate {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    bool hypothesis_met = false;
    std::string hypothesis;
    std::map<std::string, double> inputs;
};

// Evaluates every deterministic bound whose hypothesis on lambda holds:
// the in-sample and norm-contraction penalty bounds, the prediction and
// estimation penalty bounds, and (when a restricted eigenvalue estimate is
// available) the sparsity bounds. The effective gamma augments the given
// estimate with the restricted-norm ratios of the realized error
// direction, which are themselves valid probes of the definition. A small
// relative slack absorbs the finite solver tolerance.
std::vector<BoundCertificate> deterministic_certificates(
    const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& b_star,
    const Eigen::MatrixXd& b_hat, double lambda, const Eigen::MatrixXd& sigma_t,
    std::optional<double> gamma_x, int s);

// per-class centroids of the projected training data, K x (K-1)
Eigen::MatrixXd class_centroids(const simulate::Dataset& data, const Eigen::MatrixXd& b_hat);

// centers x_new with the stored column means, projects it and returns the
// 1-based label of the nearest centroid (ties break to the smallest label)
int classify(const Eigen::VectorXd& x_new, const Eigen::MatrixXd& b_hat,
             const Eigen::MatrixXd& centroids, const Eigen::VectorXd& column_means);

// --- Monte Carlo experiments ---------------------------------------------

struct ReplicateRow {
    int n = 0;
    int p = 0;
    int num_classes = 0;
    int s = 0;
    double lambda = 0.0;
    int replicate = 0;
    std::string metric;
    double value = 0.0;
};

struct SummaryRow {
    int n = 0;
    int p = 0;
    int num_classes = 0;
    int s = 0;
    double lambda = 0.0;
    std::string metric;
    int reps = 0;
    double mean = 0.0;
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<ReplicateRow> rows;      // deterministic order: point, replicate, metric
    std::vector<SummaryRow> summary;     // built by aggregate()
    std::map<std::string, double> scalars;
};

// inclusive linear-interpolation quantile of a sorted copy of values
double quantile(std::vector<double> values, double level);

void aggregate(ExperimentReport& report);

// least-squares slope of log(mean metric) against log(n)
double loglog_slope(const ExperimentReport& report, const std::string& metric);

// Distribution of n^-1 |X'E|_{inf,2} across the n grid. The scalar
// calibrated_c is the largest per-point ratio between the empirical
// (1-eta)-quantile and tau sqrt((K-1) log(p/eta) / n), so coverage at
// every probed point is at least 1-eta by construction; c_stability
// records the max/min ratio of the per-point constants.
ExperimentReport concentration_experiment(const population::PopulationModel& model,
                                          const std::vector<int>& n_grid, int reps, double eta,
                                          std::uint64_t seed, int threads = 0);

// prediction risk and estimation error across the n grid with
// lambda = C tau sqrt((K-1) log(p/eta) / n) at each n
ExperimentReport slow_rate_experiment(const population::PopulationModel& model,
                                      const std::vector<int>& n_grid, int reps, double c,
                                      std::uint64_t seed, double eta = 0.05, int threads = 0);

// same metrics for a row-sparse model; expected_s guards the construction
ExperimentReport fast_rate_experiment(const population::PopulationModel& model,
                                      const std::vector<int>& n_grid, int reps, double c,
                                      std::uint64_t seed, int expected_s, double eta = 0.05,
                                      int threads = 0);

struct CertifyOptions {
    double lambda_multiplier = 2.5; // lambda = multiplier * n^-1 |X'E|_{inf,2}
    bool sparsity_bounds = true;    // probe gamma and check the sparsity bounds (needs small p)
    REOptions re;
    int threads = 0;
};

struct CertifyResult {
    std::vector<BoundCertificate> certificates; // ordered by replicate
    int replicates = 0;
    int violations = 0;
    int hypothesis_failures = 0;
};

CertifyResult certify_experiment(const population::PopulationModel& model, int n, int reps,
                                 std::uint64_t seed, const CertifyOptions& options = {});

} // namespace slda::verify
