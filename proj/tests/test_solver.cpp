#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "slda/errors.hpp"
#include "slda/rng.hpp"
#include "slda/solver.hpp"

using namespace slda;

namespace {

Eigen::MatrixXd random_centered(int n, int p, rng::Stream& stream) {
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = stream.next_normal();
    }
    x.rowwise() -= x.colwise().mean();
    return x;
}

Eigen::MatrixXd random_matrix(int n, int c, rng::Stream& stream) {
    Eigen::MatrixXd y(n, c);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) y(i, j) = stream.next_normal();
    }
    return y;
}

// test-only scalar lasso by cyclic coordinate descent; independent of the
// library's solver internals
Eigen::VectorXd scalar_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
    const double n = static_cast<double>(x.rows());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd resid = y;
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double change = 0.0;
        for (int j = 0; j < x.cols(); ++j) {
            const double col_sq = x.col(j).squaredNorm();
            const double g = x.col(j).dot(resid) / n + (col_sq / n) * beta(j);
            double updated = 0.0;
            if (g > lambda) updated = (g - lambda) * n / col_sq;
            if (g < -lambda) updated = (g + lambda) * n / col_sq;
            const double delta = updated - beta(j);
            if (delta != 0.0) {
                resid -= delta * x.col(j);
                beta(j) = updated;
                change = std::max(change, std::abs(delta));
            }
        }
        if (change < 1e-13) break;
    }
    return beta;
}

} // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("lambda_max basics") {
    rng::Stream stream(41, 0);
    const Eigen::MatrixXd x = random_centered(20, 6, stream);
    CHECK(solver::lambda_max(x, Eigen::MatrixXd::Zero(20, 2)) == 0.0);

    // identity design: the bound is the largest row norm of Y over n
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(5, 5);
    const Eigen::MatrixXd y = random_matrix(5, 3, stream);
    double expected = 0.0;
    for (int j = 0; j < 5; ++j) expected = std::max(expected, y.row(j).norm() / 5.0);
    CHECK(solver::lambda_max(eye, y) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("penalty at or above lambda_max forces the zero solution") {
    rng::Stream stream(43, 1);
    const Eigen::MatrixXd x = random_centered(25, 8, stream);
    const Eigen::MatrixXd y = random_matrix(25, 2, stream);
    const double top = solver::lambda_max(x, y);

    const auto fit = solver::fit(solver::Problem(x, y, top));
    CHECK(fit.converged);
    CHECK(fit.b_hat.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fit.active_rows.empty());
    CHECK(fit.kkt_residual <= 1e-12);

    // bisection bracket: slightly below lambda_max something activates
    const auto below = solver::fit(solver::Problem(x, y, 0.995 * top));
    CHECK(!below.active_rows.empty());
}

TEST_CASE("unpenalized fit matches the least-squares oracle") {
    rng::Stream stream(47, 2);
    const Eigen::MatrixXd x = random_centered(30, 6, stream);
    const Eigen::MatrixXd y = random_matrix(30, 2, stream);
    solver::SolverOptions options;
    options.tolerance = 1e-12;
    const auto fit = solver::fit(solver::Problem(x, y, 0.0), options);
    const Eigen::MatrixXd ols =
        (x.transpose() * x).ldlt().solve(x.transpose() * y);
    CHECK((fit.b_hat - ols).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.kkt_residual <= 1e-10);
}

TEST_CASE("coordinate descent and proximal gradient agree") {
    rng::Stream stream(53, 3);
    const Eigen::MatrixXd x = random_centered(30, 8, stream);
    const Eigen::MatrixXd y = random_matrix(30, 2, stream);
    const double lambda = 0.3 * solver::lambda_max(x, y);

    solver::SolverOptions bcd;
    bcd.tolerance = 1e-11;
    solver::SolverOptions pg;
    pg.tolerance = 1e-11;
    pg.algorithm = solver::Algorithm::proximal_gradient;
    pg.max_iterations = 500000;

    const auto a = solver::fit(solver::Problem(x, y, lambda), bcd);
    const auto b = solver::fit(solver::Problem(x, y, lambda), pg);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK(std::abs(a.objective - b.objective) <= 1e-9 * (1.0 + std::abs(a.objective)));
    CHECK((a.b_hat - b.b_hat).norm() <= 1e-6);
}

TEST_CASE("kkt residual definition") {
    rng::Stream stream(59, 4);
    const Eigen::MatrixXd x = random_centered(20, 5, stream);
    const Eigen::MatrixXd y = random_matrix(20, 2, stream);
    const double top = solver::lambda_max(x, y);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 2);

    // at the origin with lambda >= lambda_max the conditions hold exactly
    CHECK(solver::kkt_residual(solver::Problem(x, y, top), zero) <= 1e-14);
    // at the origin with lambda = 0 the residual is the gradient bound
    CHECK(solver::kkt_residual(solver::Problem(x, y, 0.0), zero) ==
          doctest::Approx(top).epsilon(1e-12));
}

TEST_CASE("zero columns are pinned to zero") {
    rng::Stream stream(61, 5);
    Eigen::MatrixXd x = random_centered(20, 5, stream);
    x.col(2).setZero();
    const Eigen::MatrixXd y = random_matrix(20, 2, stream);
    const double lambda = 0.2 * solver::lambda_max(x, y);
    for (auto algorithm :
         {solver::Algorithm::block_coordinate_descent, solver::Algorithm::proximal_gradient}) {
        solver::SolverOptions options;
        options.algorithm = algorithm;
        const auto fit = solver::fit(solver::Problem(x, y, lambda), options);
        CHECK(fit.b_hat.row(2).cwiseAbs().maxCoeff() == 0.0);
        CHECK(fit.converged);
    }
}

TEST_CASE("exact threshold tie sets the row to zero") {
    Eigen::MatrixXd x(2, 1);
    x << 1.0, -1.0;
    Eigen::MatrixXd y(2, 1);
    y << 0.7, -0.7;
    // n^-1 x'y = 0.7 exactly
    const auto fit = solver::fit(solver::Problem(x, y, 0.7));
    CHECK(fit.b_hat(0, 0) == 0.0);
    CHECK(fit.kkt_residual == 0.0);
}

TEST_CASE("objective decreases sweep over sweep") {
    rng::Stream stream(67, 6);
    const Eigen::MatrixXd x = random_centered(40, 12, stream);
    const Eigen::MatrixXd y = random_matrix(40, 3, stream);
    solver::SolverOptions options;
    options.track_objective = true;
    const auto fit =
        solver::fit(solver::Problem(x, y, 0.1 * solver::lambda_max(x, y)), options);
    REQUIRE(fit.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
        CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-12);
    }
}

TEST_CASE("converged fits are local minima under random perturbation") {
    rng::Stream stream(71, 7);
    const Eigen::MatrixXd x = random_centered(25, 6, stream);
    const Eigen::MatrixXd y = random_matrix(25, 2, stream);
    const solver::Problem problem(x, y, 0.25 * solver::lambda_max(x, y));
    solver::SolverOptions options;
    options.tolerance = 1e-12;
    const auto fit = solver::fit(problem, options);
    REQUIRE(fit.converged);
    const double base = solver::objective_value(problem, fit.b_hat);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd delta = random_matrix(6, 2, stream);
        delta *= 0.1 * stream.next_uniform() / delta.norm();
        CHECK(solver::objective_value(problem, fit.b_hat + delta) >= base - 1e-9);
    }
}

TEST_CASE("single response column reduces to the scalar lasso") {
    rng::Stream stream(73, 8);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd x = random_centered(30, 7, stream);
        const Eigen::MatrixXd y = random_matrix(30, 1, stream);
        const double lambda = (0.1 + 0.4 * stream.next_uniform()) * solver::lambda_max(x, y);
        solver::SolverOptions options;
        options.tolerance = 1e-12;
        const auto fit = solver::fit(solver::Problem(x, y, lambda), options);
        const Eigen::VectorXd oracle = scalar_lasso(x, y.col(0), lambda);
        CHECK((fit.b_hat.col(0) - oracle).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("lambda path") {
    rng::Stream stream(79, 9);
    const Eigen::MatrixXd x = random_centered(35, 10, stream);
    const Eigen::MatrixXd y = random_matrix(35, 2, stream);

    const auto single = solver::lambda_path(x, y, {1, 0.5});
    REQUIRE(single.size() == 1);
    CHECK(single[0].b_hat.cwiseAbs().maxCoeff() == 0.0);

    const auto flat = solver::lambda_path(x, y, {4, 1.0});
    for (const auto& fit : flat) {
        CHECK(fit.lambda == doctest::Approx(flat[0].lambda));
        CHECK((fit.b_hat - flat[0].b_hat).cwiseAbs().maxCoeff() == 0.0);
    }

    const auto path = solver::lambda_path(x, y, {8, 0.05});
    solver::SolverOptions cold;
    for (const auto& fit : path) {
        const auto cold_fit = solver::fit(solver::Problem(x, y, fit.lambda), cold);
        CHECK(fit.objective <= cold_fit.objective + 1e-9);
    }
}

TEST_CASE("theoretical lambda") {
    // all factors equal to one: C tau sqrt(1 * log(e) / 1)
    CHECK(solver::theoretical_lambda(1.0, 2, 1, 1, std::exp(-1.0), 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    const double base = solver::theoretical_lambda(1.5, 3, 100, 1000, 0.05, 1.0);
    CHECK(solver::theoretical_lambda(1.5, 3, 100, 1000, 0.05, 2.0) ==
          doctest::Approx(2.0 * base).epsilon(1e-14));
    CHECK(solver::theoretical_lambda(1.5, 3, 100, 1000, 0.05, 2.0) ==
          doctest::Approx(0.36989).epsilon(1e-4));
    CHECK_THROWS_AS(solver::theoretical_lambda(1.0, 2, 10, 100, 1.5, 1.0), BadParameter);
    CHECK_THROWS_AS(solver::theoretical_lambda(1.0, 1, 10, 100, 0.5, 1.0), BadParameter);
}

TEST_CASE("standardization is a no-op for unit-scale columns") {
    rng::Stream stream(83, 10);
    Eigen::MatrixXd x = random_centered(40, 6, stream);
    const double n = 40.0;
    for (int j = 0; j < x.cols(); ++j) x.col(j) /= std::sqrt(x.col(j).squaredNorm() / n);
    const Eigen::MatrixXd y = random_matrix(40, 2, stream);
    const double lambda = 0.3 * solver::lambda_max(x, y);
    solver::SolverOptions plain;
    solver::SolverOptions standardized;
    standardized.standardize = true;
    const auto a = solver::fit(solver::Problem(x, y, lambda), plain);
    const auto b = solver::fit(solver::Problem(x, y, lambda), standardized);
    CHECK((a.b_hat - b.b_hat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("problem validation") {
    Eigen::MatrixXd uncentered(3, 1);
    uncentered << 1.0, 2.0, 3.0;
    Eigen::MatrixXd y(3, 1);
    y << 1.0, 0.0, -1.0;
    CHECK_THROWS_AS(solver::Problem(uncentered, y, 0.1), BadParameter);
    Eigen::MatrixXd centered(3, 1);
    centered << -1.0, 0.0, 1.0;
    CHECK_THROWS_AS(solver::Problem(centered, y, -0.1), BadParameter);
    CHECK_THROWS_AS(solver::Problem(centered, Eigen::MatrixXd::Zero(2, 1), 0.1),
                    DimensionMismatch);
}

TEST_SUITE_END();
