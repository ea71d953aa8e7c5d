#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace slda::population {

// Ground-truth Gaussian mixture: class priors, class means (columns of a
// p x K matrix) and a shared within-class covariance.
struct PopulationModel {
    Eigen::VectorXd pi;
    Eigen::MatrixXd means;
    Eigen::MatrixXd sigma_w;

    int num_classes() const { return static_cast<int>(pi.size()); }
    int dim() const { return static_cast<int>(means.rows()); }
};

// Quantities derived from the model: mean contrasts, marginal covariance,
// target coefficients, the sub-gaussian scale and the row support.
struct PopulationDerived {
    Eigen::MatrixXd delta;   // p x (K-1)
    Eigen::MatrixXd sigma_t; // p x p
    Eigen::MatrixXd b_star;  // p x (K-1)
    double tau = 0.0;
    std::vector<int> support; // 0-based rows of b_star with nonzero norm
    int s = 0;
};

// Throws InvalidModel on structural problems. A nonzero overall mean is
// repaired by recentering the class means; the warning goes to `warnings`
// when provided.
void validate(PopulationModel& model, std::ostream* warnings = nullptr);

Eigen::MatrixXd contrast_matrix(const PopulationModel& model);
Eigen::MatrixXd total_covariance(const PopulationModel& model);
// solves sigma_t * b = delta through a Cholesky factorization
Eigen::MatrixXd population_coefficients(const PopulationModel& model);
double tau(const PopulationModel& model);

std::vector<int> support_of(const Eigen::MatrixXd& b, double threshold);
// default support threshold: 1e-10 times the largest row norm
double default_support_threshold(const Eigen::MatrixXd& b);

PopulationDerived derive(const PopulationModel& model);

// Text format: keyword blocks (classes/dim/pi/means/sigma_w); sigma_w rows
// may give the full row or just the lower triangle.
PopulationModel load_model(const std::string& path);
void save_model(const PopulationModel& model, const std::string& path);

// Deterministic model generators used by the experiments and tests.
// Dense: every row of b_star is active; sparse: exactly `s` active rows,
// arranged through means supported on the first s coordinates with
// identity within-class covariance so the support is exact.
PopulationModel make_dense_model(int p, int num_classes, double separation, std::uint64_t seed);
PopulationModel make_sparse_model(int p, int num_classes, int s, double separation,
                                  std::uint64_t seed);

} // namespace slda::population
