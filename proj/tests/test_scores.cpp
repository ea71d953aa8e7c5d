#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "slda/errors.hpp"
#include "slda/rng.hpp"
#include "slda/scores.hpp"

using namespace slda;

namespace {

scores::ClassIndicator indicator_from_counts(const Eigen::VectorXi& counts) {
    std::vector<int> labels;
    for (int k = 0; k < counts.size(); ++k) {
        labels.insert(labels.end(), static_cast<std::size_t>(counts(k)), k + 1);
    }
    return scores::indicator_matrix(labels, static_cast<int>(counts.size()));
}

} // namespace

TEST_SUITE_BEGIN("scores");

TEST_CASE("indicator matrix basics") {
    const auto z = scores::indicator_matrix({1, 2}, 2);
    CHECK(z.n == 2);
    CHECK(z.z(0, 0) == 1.0);
    CHECK(z.z(0, 1) == 0.0);
    CHECK(z.z(1, 0) == 0.0);
    CHECK(z.z(1, 1) == 1.0);
    CHECK(z.class_counts(0) == 1);
    CHECK(z.class_counts(1) == 1);

    const auto z2 = scores::indicator_matrix({1, 1, 2}, 2);
    CHECK(z2.class_counts(0) == 2);
    CHECK(z2.class_counts(1) == 1);

    CHECK_THROWS_AS(scores::indicator_matrix({1, 1, 3}, 3), EmptyClass);
    CHECK_THROWS_AS(scores::indicator_matrix({0, 1}, 2), BadLabel);
    CHECK_THROWS_AS(scores::indicator_matrix({1, 3}, 2), BadLabel);
}

TEST_CASE("explicit score matrix for three singleton classes") {
    Eigen::VectorXi counts(3);
    counts << 1, 1, 1;
    const auto theta = scores::build_score_matrix(counts);
    // direct evaluation of the column formula at n = 3
    CHECK(theta.theta(0, 0) == doctest::Approx(1.2247448713915890).epsilon(1e-12));
    CHECK(theta.theta(1, 0) == doctest::Approx(-1.2247448713915890).epsilon(1e-12));
    CHECK(theta.theta(2, 0) == 0.0);
    CHECK(theta.theta(0, 1) == doctest::Approx(0.70710678118654757).epsilon(1e-12));
    CHECK(theta.theta(1, 1) == doctest::Approx(0.70710678118654757).epsilon(1e-12));
    CHECK(theta.theta(2, 1) == doctest::Approx(-1.4142135623730951).epsilon(1e-12));

    const auto z = indicator_from_counts(counts);
    const Eigen::MatrixXd gram = theta.theta.transpose() * z.z.transpose() * z.z * theta.theta;
    CHECK((gram - 3.0 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd centering =
        theta.theta.transpose() * z.z.transpose() * z.z * Eigen::VectorXd::Ones(3);
    CHECK(centering.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-class reduction") {
    rng::Stream stream(2024, 0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXi counts(2);
        counts << 1 + static_cast<int>(stream.next_below(50)),
            1 + static_cast<int>(stream.next_below(50));
        const double n1 = counts(0);
        const double n2 = counts(1);
        const auto theta = scores::build_score_matrix(counts);
        CHECK(theta.theta(0, 0) == doctest::Approx(std::sqrt(n2 / n1)).epsilon(1e-12));
        CHECK(theta.theta(1, 0) == doctest::Approx(-std::sqrt(n1 / n2)).epsilon(1e-12));
    }
    // balanced classes give scores (1, -1)
    Eigen::VectorXi balanced(2);
    balanced << 7, 7;
    const auto theta = scores::build_score_matrix(balanced);
    CHECK(theta.theta(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(theta.theta(1, 0) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("score matrix rejects bad inputs") {
    Eigen::VectorXi one_class(1);
    one_class << 5;
    CHECK_THROWS_AS(scores::build_score_matrix(one_class), TooFewClasses);
    Eigen::VectorXi with_zero(3);
    with_zero << 2, 0, 1;
    CHECK_THROWS_AS(scores::build_score_matrix(with_zero), EmptyClass);
}

TEST_CASE("constraint certificates on random class counts") {
    rng::Stream stream(99, 1);
    for (int trial = 0; trial < 60; ++trial) {
        const int k = 2 + static_cast<int>(stream.next_below(7));
        Eigen::VectorXi counts(k);
        for (int j = 0; j < k; ++j) counts(j) = 1 + static_cast<int>(stream.next_below(50));
        const auto z = indicator_from_counts(counts);
        const auto theta = scores::build_score_matrix(counts);
        const auto cert = scores::verify_score_constraints(theta, z, 1e-10 * z.n);
        CHECK(cert.pass);
        // structural zeros below the first subdiagonal
        for (int l = 0; l < k - 1; ++l) {
            for (int j = l + 2; j < k; ++j) CHECK(theta.theta(j, l) == 0.0);
        }
    }
}

TEST_CASE("certificate detects violations") {
    Eigen::VectorXi counts(2);
    counts << 3, 5;
    const auto z = indicator_from_counts(counts);
    auto theta = scores::build_score_matrix(counts);

    scores::ScoreMatrix doubled{2.0 * theta.theta};
    const auto cert = scores::verify_score_constraints(doubled, z, 1e-10);
    CHECK_FALSE(cert.pass);
    // (2 theta)' Z'Z (2 theta) = 4n on the diagonal, so the violation is 3n
    CHECK(cert.max_orthogonality_violation == doctest::Approx(3.0 * z.n).epsilon(1e-12));

    scores::ScoreMatrix shifted{theta.theta.array() + 1.0};
    const auto cert2 = scores::verify_score_constraints(shifted, z, 1e-10);
    CHECK(cert2.max_centering_violation > 0.0);
    CHECK_FALSE(cert2.pass);

    scores::ScoreMatrix wrong_shape{Eigen::MatrixXd::Zero(3, 2)};
    CHECK_THROWS_AS(scores::verify_score_constraints(wrong_shape, z, 1e-10), DimensionMismatch);
}

TEST_CASE("transformed response copies score rows") {
    const auto z = scores::indicator_matrix({1, 2}, 2);
    const auto theta = scores::build_score_matrix(z.class_counts);
    const Eigen::MatrixXd y = scores::transformed_response(z, theta);
    CHECK(y(0, 0) == doctest::Approx(1.0));
    CHECK(y(1, 0) == doctest::Approx(-1.0));

    rng::Stream stream(7, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 2 + static_cast<int>(stream.next_below(5));
        Eigen::VectorXi counts(k);
        for (int j = 0; j < k; ++j) counts(j) = 1 + static_cast<int>(stream.next_below(20));
        const auto zi = indicator_from_counts(counts);
        const auto th = scores::build_score_matrix(counts);
        const Eigen::MatrixXd yy = scores::transformed_response(zi, th);
        const double n = static_cast<double>(zi.n);
        CHECK((yy.transpose() * yy - n * Eigen::MatrixXd::Identity(k - 1, k - 1))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10 * n);
        CHECK(yy.colwise().sum().cwiseAbs().maxCoeff() < 1e-10 * n);
        CHECK(yy.colwise().mean().cwiseAbs().maxCoeff() < 1e-12 * n);
    }
}

TEST_SUITE_END();
