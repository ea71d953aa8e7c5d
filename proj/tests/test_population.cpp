#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "slda/errors.hpp"
#include "slda/population.hpp"
#include "slda/rng.hpp"

using namespace slda;

namespace {

population::PopulationModel random_model(int p, int k, rng::Stream& stream) {
    population::PopulationModel model;
    model.pi.resize(k);
    for (int j = 0; j < k; ++j) model.pi(j) = 0.2 + stream.next_uniform();
    model.pi /= model.pi.sum();
    model.means.resize(p, k);
    for (int i = 0; i < p * k; ++i) model.means(i / k, i % k) = stream.next_normal();
    Eigen::MatrixXd noise(p, p);
    for (int i = 0; i < p * p; ++i) noise(i / p, i % p) = stream.next_normal();
    model.sigma_w = noise * noise.transpose() / p + Eigen::MatrixXd::Identity(p, p) * 0.5;
    population::validate(model);
    return model;
}

} // namespace

TEST_SUITE_BEGIN("population");

TEST_CASE("two-class contrast is the weighted mean difference") {
    rng::Stream stream(31, 0);
    for (int trial = 0; trial < 10; ++trial) {
        population::PopulationModel model = random_model(4, 2, stream);
        const Eigen::MatrixXd delta = population::contrast_matrix(model);
        const Eigen::VectorXd expected = std::sqrt(model.pi(0) * model.pi(1)) *
                                         (model.means.col(0) - model.means.col(1));
        CHECK((delta.col(0) - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("balanced symmetric two-class model") {
    population::PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(2, 0.5);
    Eigen::VectorXd m(3);
    m << 1.0, -2.0, 0.5;
    model.means.resize(3, 2);
    model.means.col(0) = m;
    model.means.col(1) = -m;
    model.sigma_w = Eigen::MatrixXd::Identity(3, 3);
    population::validate(model);

    const Eigen::MatrixXd delta = population::contrast_matrix(model);
    CHECK((delta.col(0) - m).cwiseAbs().maxCoeff() < 1e-12); // (1/2)(mu1 - mu2) = m

    const Eigen::MatrixXd sigma_t = population::total_covariance(model);
    const Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(3, 3) + m * m.transpose();
    CHECK((sigma_t - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero means give zero contrasts and sigma_t = sigma_w") {
    population::PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    model.means = Eigen::MatrixXd::Zero(4, 3);
    model.sigma_w = Eigen::MatrixXd::Identity(4, 4);
    population::validate(model);
    CHECK(population::contrast_matrix(model).cwiseAbs().maxCoeff() == 0.0);
    CHECK((population::total_covariance(model) - model.sigma_w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the two covariance formulas agree on random models") {
    rng::Stream stream(33, 1);
    for (int trial = 0; trial < 25; ++trial) {
        const int p = 2 + static_cast<int>(stream.next_below(8));
        const int k = 2 + static_cast<int>(stream.next_below(5));
        population::PopulationModel model = random_model(p, k, stream);
        const Eigen::MatrixXd delta = population::contrast_matrix(model);
        const Eigen::MatrixXd via_moments = population::total_covariance(model);
        const Eigen::MatrixXd via_contrasts = model.sigma_w + delta * delta.transpose();
        CHECK((via_moments - via_contrasts).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("population coefficients solve the linear system") {
    rng::Stream stream(35, 2);
    population::PopulationModel model = random_model(6, 3, stream);
    const Eigen::MatrixXd b_star = population::population_coefficients(model);
    const Eigen::MatrixXd sigma_t = population::total_covariance(model);
    const Eigen::MatrixXd delta = population::contrast_matrix(model);
    CHECK((sigma_t * b_star - delta).cwiseAbs().maxCoeff() < 1e-8);

    // two-class closed form
    population::PopulationModel two = random_model(5, 2, stream);
    const Eigen::MatrixXd beta = population::population_coefficients(two);
    const Eigen::MatrixXd sigma_t2 = population::total_covariance(two);
    const Eigen::VectorXd expected =
        std::sqrt(two.pi(0) * two.pi(1)) *
        sigma_t2.llt().solve(two.means.col(0) - two.means.col(1));
    CHECK((beta.col(0) - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity total covariance returns the contrasts") {
    // sigma_w = I - sum pi_k mu_k mu_k' makes sigma_t exactly the identity
    population::PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(2, 0.5);
    Eigen::VectorXd m(3);
    m << 0.3, -0.2, 0.1;
    model.means.resize(3, 2);
    model.means.col(0) = m;
    model.means.col(1) = -m;
    model.sigma_w = Eigen::MatrixXd::Identity(3, 3) - m * m.transpose();
    population::validate(model);
    const Eigen::MatrixXd b_star = population::population_coefficients(model);
    const Eigen::MatrixXd delta = population::contrast_matrix(model);
    CHECK((b_star - delta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tau") {
    population::PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(2, 0.5);
    model.means = Eigen::MatrixXd::Zero(2, 2);
    model.sigma_w = Eigen::MatrixXd::Identity(2, 2);
    population::validate(model);
    CHECK(population::tau(model) == doctest::Approx(1.0));

    model.means(0, 0) = 2.0;
    model.means(0, 1) = -2.0;
    population::validate(model);
    CHECK(population::tau(model) == doctest::Approx(std::sqrt(5.0)));

    population::PopulationModel diag;
    diag.pi = Eigen::VectorXd::Constant(2, 0.5);
    diag.means = Eigen::MatrixXd::Zero(2, 2);
    diag.sigma_w = Eigen::Vector2d(4.0, 1.0).asDiagonal();
    population::validate(diag);
    CHECK(population::tau(diag) == doctest::Approx(2.0));

    // monotone in every variance and mean magnitude
    diag.sigma_w(1, 1) = 9.0;
    CHECK(population::tau(diag) == doctest::Approx(3.0));
    diag.means(1, 0) = 4.0;
    diag.means(1, 1) = -4.0;
    population::validate(diag);
    CHECK(population::tau(diag) == doctest::Approx(5.0));
}

TEST_CASE("support extraction") {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 2);
    CHECK(population::support_of(b, 0.0).empty());
    b(2, 0) = 0.5;
    CHECK(population::support_of(b, 1e-8) == std::vector<int>{2});
    b(0, 1) = 1e-14;
    CHECK(population::support_of(b, 1e-8) == std::vector<int>{2});
    CHECK_THROWS_AS(population::support_of(b, -1.0), BadParameter);
}

TEST_CASE("nonzero overall mean is recentered with a warning") {
    population::PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(2, 0.5);
    model.means.resize(2, 2);
    model.means << 1.0, 2.0, 0.0, 1.0;
    model.sigma_w = Eigen::MatrixXd::Identity(2, 2);
    std::ostringstream warnings;
    population::validate(model, &warnings);
    CHECK(warnings.str().find("recentering") != std::string::npos);
    CHECK((model.means * model.pi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("invalid models are rejected") {
    population::PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(2, 0.4); // sums to 0.8
    model.means = Eigen::MatrixXd::Zero(2, 2);
    model.sigma_w = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(population::validate(model), InvalidModel);

    model.pi = Eigen::VectorXd::Constant(2, 0.5);
    model.sigma_w << 1.0, 0.5, -0.5, 1.0; // asymmetric
    CHECK_THROWS_AS(population::validate(model), InvalidModel);

    model.sigma_w << 1.0, 2.0, 2.0, 1.0; // indefinite
    CHECK_THROWS_AS(population::validate(model), InvalidModel);
}

TEST_CASE("numerically singular total covariance is flagged") {
    population::PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(2, 0.5);
    model.means = Eigen::MatrixXd::Zero(2, 2);
    model.sigma_w = Eigen::Vector2d(1.0, 1e-16).asDiagonal();
    CHECK_THROWS_AS(population::population_coefficients(model), SingularCovariance);
}

TEST_CASE("model file round trip is exact") {
    rng::Stream stream(37, 3);
    population::PopulationModel model = random_model(5, 3, stream);
    const std::string path =
        (std::filesystem::temp_directory_path() / "slda_test_model.txt").string();
    population::save_model(model, path);
    const population::PopulationModel loaded = population::load_model(path);
    CHECK((loaded.pi - model.pi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.means - model.means).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.sigma_w - model.sigma_w).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("generated experiment models") {
    const population::PopulationModel dense = population::make_dense_model(12, 3, 0.8, 7);
    const population::PopulationDerived derived_dense = population::derive(dense);
    CHECK(derived_dense.s == 12);

    const population::PopulationModel sparse = population::make_sparse_model(30, 3, 5, 1.0, 7);
    const population::PopulationDerived derived_sparse = population::derive(sparse);
    CHECK(derived_sparse.s == 5);
    for (int j : derived_sparse.support) CHECK(j < 5);
    CHECK(population::derive(sparse).tau >= 1.0);
}

TEST_SUITE_END();
