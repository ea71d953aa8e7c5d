#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace slda::solver {

// Row-sparse multi-response least squares:
//   minimize (2n)^-1 |Y - X B|_F^2 + lambda * sum_j |row_j(B)|_2
// X must be column-centered (the problem constructor checks this).
struct Problem {
    Eigen::MatrixXd x; // n x p
    Eigen::MatrixXd y; // n x (K-1)
    double lambda = 0.0;

    Problem(Eigen::MatrixXd x_in, Eigen::MatrixXd y_in, double lambda_in);

    int n() const { return static_cast<int>(x.rows()); }
    int p() const { return static_cast<int>(x.cols()); }
    int responses() const { return static_cast<int>(y.cols()); }
};

enum class Algorithm { block_coordinate_descent, proximal_gradient };

struct SolverOptions {
    int max_iterations = 100000; // sweeps (BCD) or gradient steps (PG)
    double tolerance = 1e-10;
    Algorithm algorithm = Algorithm::block_coordinate_descent;
    std::optional<Eigen::MatrixXd> warm_start;
    // scale columns of X to unit root-mean-square before fitting and map
    // the coefficients back afterwards
    bool standardize = false;
    // record the objective after every sweep/step (tests use this)
    bool track_objective = false;
};

struct FitResult {
    Eigen::MatrixXd b_hat;
    double objective = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    std::vector<int> active_rows;
    bool converged = false;
    double lambda = 0.0;
    std::vector<double> objective_trace;
};

double objective_value(const Problem& problem, const Eigen::MatrixXd& b);

// max over rows of the first-order optimality violation: active rows
// measure |n^-1 x_j'(Y - XB) - lambda b_j / |b_j||_2, inactive rows
// measure the excess of |n^-1 x_j'(Y - XB)|_2 over lambda
double kkt_residual(const Problem& problem, const Eigen::MatrixXd& b);

// smallest penalty that forces the all-zero solution
double lambda_max(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

FitResult fit(const Problem& problem, const SolverOptions& options = {});

struct PathGrid {
    int count = 1;
    double min_ratio = 1.0;
};

// geometric grid from lambda_max down to min_ratio * lambda_max, each fit
// warm-started from the previous one
std::vector<FitResult> lambda_path(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                   const PathGrid& grid, const SolverOptions& options = {});

// C * tau * sqrt((K-1) log(p / eta) / n)
double theoretical_lambda(double tau, int num_classes, int p, int n, double eta, double c);

} // namespace slda::solver
