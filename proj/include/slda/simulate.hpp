#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "slda/population.hpp"
#include "slda/rng.hpp"
#include "slda/scores.hpp"

namespace slda::simulate {

// Sampled design with the centering metadata needed for out-of-sample
// prediction. (model, n, seed, stream_id) fully determines the content.
struct Dataset {
    Eigen::MatrixXd x; // n x p, column-centered
    std::vector<int> labels; // 1..K
    scores::ClassIndicator z;
    Eigen::MatrixXd y; // n x (K-1)
    Eigen::VectorXd column_means;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

enum class LabelScheme {
    multinomial, // labels drawn i.i.d. from pi (the model's own law)
    stratified,  // class counts fixed by largest remainder, order shuffled
};

std::vector<int> sample_labels(const Eigen::VectorXd& pi, int n, rng::Stream& stream,
                               LabelScheme scheme = LabelScheme::multinomial);

// subtracts column means; returns the centered matrix and the means
std::pair<Eigen::MatrixXd, Eigen::VectorXd> center_columns(const Eigen::MatrixXd& x_raw);

// Holds the Cholesky factor of sigma_w so repeated replicates of the same
// model skip the factorization. Immutable after construction.
class Sampler {
  public:
    explicit Sampler(const population::PopulationModel& model);

    Dataset sample(int n, std::uint64_t seed, std::uint64_t stream_id = 0,
                   LabelScheme scheme = LabelScheme::multinomial) const;

    // one feature vector from the mixture (used for holdout draws)
    Eigen::VectorXd draw_feature(rng::Stream& stream) const;

    const population::PopulationModel& model() const { return model_; }

  private:
    enum class Structure { identity, diagonal, dense };
    population::PopulationModel model_;
    Structure structure_;
    Eigen::VectorXd diag_scale_;
    Eigen::MatrixXd chol_lower_;
};

Dataset sample_dataset(const population::PopulationModel& model, int n, std::uint64_t seed,
                       std::uint64_t stream_id = 0,
                       LabelScheme scheme = LabelScheme::multinomial);

// Monte Carlo estimate of E|x'(b_hat - b_star)|^2 over m fresh draws
double holdout_risk_estimate(const population::PopulationModel& model,
                             const Eigen::MatrixXd& b_hat, const Eigen::MatrixXd& b_star, int m,
                             std::uint64_t seed);

} // namespace slda::simulate
