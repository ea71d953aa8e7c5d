#include "slda/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "slda/errors.hpp"
#include "slda/kernels.hpp"

namespace slda::solver {

namespace {

constexpr double kZeroColumnGuard = 1e-300;
// sweeps between full recomputations of the maintained residual
constexpr int kResidualRefresh = 64;

void check_dims(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows()) throw DimensionMismatch("X and Y row counts differ");
    if (x.rows() < 1 || x.cols() < 1 || y.cols() < 1) {
        throw DimensionMismatch("X and Y must be nonempty");
    }
}

double group_norm(const Eigen::MatrixXd& b) {
    double out = 0.0;
    for (int j = 0; j < b.rows(); ++j) out += b.row(j).norm();
    return out;
}

} // namespace

Problem::Problem(Eigen::MatrixXd x_in, Eigen::MatrixXd y_in, double lambda_in)
    : x(std::move(x_in)), y(std::move(y_in)), lambda(lambda_in) {
    check_dims(x, y);
    if (lambda < 0.0) throw BadParameter("lambda must be nonnegative");
    const double n = static_cast<double>(x.rows());
    for (int j = 0; j < x.cols(); ++j) {
        const double scale = std::sqrt(kernels::sq_norm(x.col(j).data(), x.rows()) / n);
        const double mean = x.col(j).sum() / n;
        if (std::abs(mean) > 1e-8 * (1.0 + scale)) {
            throw BadParameter("column " + std::to_string(j) + " of X is not centered");
        }
    }
}

double objective_value(const Problem& problem, const Eigen::MatrixXd& b) {
    if (b.rows() != problem.p() || b.cols() != problem.responses()) {
        throw DimensionMismatch("coefficient matrix has wrong shape");
    }
    const Eigen::MatrixXd resid = problem.y - problem.x * b;
    const double n = static_cast<double>(problem.n());
    return kernels::sq_norm(resid.data(), static_cast<std::size_t>(resid.size())) / (2.0 * n) +
           problem.lambda * group_norm(b);
}

double kkt_residual(const Problem& problem, const Eigen::MatrixXd& b) {
    if (b.rows() != problem.p() || b.cols() != problem.responses()) {
        throw DimensionMismatch("coefficient matrix has wrong shape");
    }
    const int n = problem.n();
    const int cols = problem.responses();
    const Eigen::MatrixXd resid = problem.y - problem.x * b;
    Eigen::VectorXd grad(cols);
    double worst = 0.0;
    for (int j = 0; j < problem.p(); ++j) {
        kernels::dot_cols(problem.x.col(j).data(), resid.data(), static_cast<std::size_t>(n),
                          static_cast<std::size_t>(cols), static_cast<std::size_t>(n),
                          grad.data());
        grad /= static_cast<double>(n);
        const double row_norm = b.row(j).norm();
        double violation;
        if (row_norm > 0.0) {
            violation = (grad - problem.lambda * b.row(j).transpose() / row_norm).norm();
        } else {
            violation = std::max(0.0, grad.norm() - problem.lambda);
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

double lambda_max(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    check_dims(x, y);
    const int n = static_cast<int>(x.rows());
    const int cols = static_cast<int>(y.cols());
    Eigen::VectorXd grad(cols);
    double best = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
        kernels::dot_cols(x.col(j).data(), y.data(), static_cast<std::size_t>(n),
                          static_cast<std::size_t>(cols), static_cast<std::size_t>(n),
                          grad.data());
        best = std::max(best, grad.norm() / static_cast<double>(n));
    }
    return best;
}

namespace {

struct Workspace {
    Eigen::MatrixXd b;
    Eigen::MatrixXd resid;
    Eigen::VectorXd col_sq;
};

Workspace prepare(const Problem& problem, const SolverOptions& options) {
    Workspace w;
    const int p = problem.p();
    const int cols = problem.responses();
    if (options.warm_start.has_value()) {
        if (options.warm_start->rows() != p || options.warm_start->cols() != cols) {
            throw DimensionMismatch("warm start has wrong shape");
        }
        w.b = *options.warm_start;
    } else {
        w.b = Eigen::MatrixXd::Zero(p, cols);
    }
    w.col_sq.resize(p);
    for (int j = 0; j < p; ++j) {
        w.col_sq(j) = kernels::sq_norm(problem.x.col(j).data(), problem.x.rows());
    }
    // rows over numerically vanished columns are pinned to zero
    const double guard = std::max(kZeroColumnGuard, 1e-24 * w.col_sq.maxCoeff());
    for (int j = 0; j < p; ++j) {
        if (w.col_sq(j) <= guard) {
            w.col_sq(j) = 0.0;
            w.b.row(j).setZero();
        }
    }
    w.resid = problem.y - problem.x * w.b;
    return w;
}

FitResult finalize(const Problem& problem, Workspace&& w, int iterations, bool converged,
                   std::vector<double>&& trace) {
    FitResult out;
    out.b_hat = std::move(w.b);
    out.lambda = problem.lambda;
    out.objective = objective_value(problem, out.b_hat);
    out.iterations = iterations;
    out.kkt_residual = kkt_residual(problem, out.b_hat);
    out.converged = converged;
    for (int j = 0; j < out.b_hat.rows(); ++j) {
        if (out.b_hat.row(j).norm() > 0.0) out.active_rows.push_back(j);
    }
    out.objective_trace = std::move(trace);
    return out;
}

FitResult fit_bcd(const Problem& problem, const SolverOptions& options) {
    const int n = problem.n();
    const int p = problem.p();
    const int cols = problem.responses();
    const double dn = static_cast<double>(n);
    Workspace w = prepare(problem, options);

    Eigen::VectorXd g(cols);
    Eigen::VectorXd delta(cols);
    std::vector<double> trace;

    bool converged = false;
    int sweep = 0;
    for (; sweep < options.max_iterations && !converged; ++sweep) {
        double max_change = 0.0;
        for (int j = 0; j < p; ++j) {
            if (w.col_sq(j) <= kZeroColumnGuard) continue;
            kernels::dot_cols(problem.x.col(j).data(), w.resid.data(),
                              static_cast<std::size_t>(n), static_cast<std::size_t>(cols),
                              static_cast<std::size_t>(n), g.data());
            const bool was_active = w.b.row(j).norm() > 0.0;
            if (was_active) g += w.col_sq(j) * w.b.row(j).transpose();
            // |g|/n matches lambda_max bit for bit, so the boundary case
            // lambda = lambda_max lands exactly on zero
            const double g_norm = g.norm() / dn;
            if (g_norm > problem.lambda) {
                g *= (1.0 - problem.lambda / g_norm) / w.col_sq(j);
            } else {
                g.setZero();
            }
            delta = g - w.b.row(j).transpose();
            const double change = delta.norm();
            if (change > 0.0) {
                delta = -delta;
                kernels::axpy_cols(delta.data(), problem.x.col(j).data(), w.resid.data(),
                                   static_cast<std::size_t>(n), static_cast<std::size_t>(cols),
                                   static_cast<std::size_t>(n));
                w.b.row(j) = g.transpose();
                max_change = std::max(max_change, change);
            }
        }
        if (options.track_objective) {
            trace.push_back(kernels::sq_norm(w.resid.data(),
                                             static_cast<std::size_t>(w.resid.size())) /
                                (2.0 * dn) +
                            problem.lambda * group_norm(w.b));
        }
        if ((sweep + 1) % kResidualRefresh == 0) {
            w.resid = problem.y - problem.x * w.b;
        }
        const double b_scale = 1.0 + w.b.norm();
        if (max_change <= options.tolerance * b_scale) {
            // coordinate stagnation alone can mask non-optimality
            if (kkt_residual(problem, w.b) <= 10.0 * options.tolerance) {
                converged = true;
            } else if (max_change == 0.0) {
                break; // exact fixed point that still fails the check
            }
        }
    }
    return finalize(problem, std::move(w), sweep, converged, std::move(trace));
}

double operator_norm_sq(const Eigen::MatrixXd& x) {
    // power iteration on X'X; a small inflation guards the step size
    // against an underconverged estimate
    Eigen::VectorXd v = Eigen::VectorXd::Ones(x.cols()).normalized();
    double value = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::VectorXd next = x.transpose() * (x * v);
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        next /= norm;
        const double previous = value;
        value = norm;
        v = next;
        if (iter > 4 && std::abs(value - previous) <= 1e-12 * value) break;
    }
    return value * 1.0000001;
}

FitResult fit_proximal_gradient(const Problem& problem, const SolverOptions& options) {
    const double dn = static_cast<double>(problem.n());
    Workspace w = prepare(problem, options);

    const double lipschitz = operator_norm_sq(problem.x) / dn;
    if (lipschitz <= 0.0) {
        return finalize(problem, std::move(w), 0, true, {});
    }
    const double step = 1.0 / lipschitz;
    std::vector<double> trace;

    bool converged = false;
    int iter = 0;
    double previous_objective = std::numeric_limits<double>::infinity();
    for (; iter < options.max_iterations && !converged; ++iter) {
        // w.resid = Y - XB is maintained exactly: recomputed from B each step
        Eigen::MatrixXd grad = problem.x.transpose() * w.resid / (-dn);
        w.b -= step * grad;
        const double threshold = step * problem.lambda;
        for (int j = 0; j < w.b.rows(); ++j) {
            if (w.col_sq(j) <= kZeroColumnGuard) {
                w.b.row(j).setZero();
                continue;
            }
            const double row_norm = w.b.row(j).norm();
            if (row_norm > threshold) {
                w.b.row(j) *= 1.0 - threshold / row_norm;
            } else {
                w.b.row(j).setZero();
            }
        }
        w.resid = problem.y - problem.x * w.b;
        const double objective =
            kernels::sq_norm(w.resid.data(), static_cast<std::size_t>(w.resid.size())) /
                (2.0 * dn) +
            problem.lambda * group_norm(w.b);
        if (options.track_objective) trace.push_back(objective);
        if (iter % 20 == 19 || previous_objective - objective <= 1e-15 * (1.0 + objective)) {
            if (kkt_residual(problem, w.b) <= 10.0 * options.tolerance) converged = true;
        }
        previous_objective = objective;
    }
    return finalize(problem, std::move(w), iter, converged, std::move(trace));
}

} // namespace

FitResult fit(const Problem& problem, const SolverOptions& options) {
    if (options.max_iterations < 1) throw BadParameter("max_iterations must be at least 1");
    if (!(options.tolerance > 0.0)) throw BadParameter("tolerance must be positive");
    if (options.standardize) {
        const double dn = static_cast<double>(problem.n());
        Eigen::VectorXd scale(problem.p());
        Eigen::MatrixXd scaled = problem.x;
        for (int j = 0; j < problem.p(); ++j) {
            const double rms = std::sqrt(kernels::sq_norm(scaled.col(j).data(), scaled.rows()) / dn);
            scale(j) = rms > 0.0 ? rms : 1.0;
            scaled.col(j) /= scale(j);
        }
        SolverOptions inner = options;
        inner.standardize = false;
        if (inner.warm_start.has_value()) {
            Eigen::MatrixXd warm = *inner.warm_start;
            for (int j = 0; j < warm.rows(); ++j) warm.row(j) *= scale(j);
            inner.warm_start = std::move(warm);
        }
        Problem scaled_problem(std::move(scaled), problem.y, problem.lambda);
        FitResult result = fit(scaled_problem, inner);
        // back-transform the coefficients; objective and optimality refer to
        // the standardized problem, which is the one that was minimized
        for (int j = 0; j < result.b_hat.rows(); ++j) result.b_hat.row(j) /= scale(j);
        return result;
    }
    switch (options.algorithm) {
        case Algorithm::block_coordinate_descent: return fit_bcd(problem, options);
        case Algorithm::proximal_gradient: return fit_proximal_gradient(problem, options);
    }
    throw BadParameter("unknown algorithm");
}

std::vector<FitResult> lambda_path(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                   const PathGrid& grid, const SolverOptions& options) {
    if (grid.count < 1) throw BadParameter("path grid needs at least one point");
    if (!(grid.min_ratio > 0.0) || grid.min_ratio > 1.0) {
        throw BadParameter("min_ratio must lie in (0, 1]");
    }
    const double top = lambda_max(x, y);
    std::vector<FitResult> path;
    path.reserve(static_cast<std::size_t>(grid.count));
    SolverOptions step_options = options;
    for (int i = 0; i < grid.count; ++i) {
        const double t = grid.count == 1 ? 0.0 : static_cast<double>(i) / (grid.count - 1);
        const double lambda = top * std::pow(grid.min_ratio, t);
        Problem problem(x, y, lambda);
        if (!path.empty()) step_options.warm_start = path.back().b_hat;
        path.push_back(fit(problem, step_options));
    }
    return path;
}

double theoretical_lambda(double tau, int num_classes, int p, int n, double eta, double c) {
    if (!(eta > 0.0) || !(eta < 1.0)) throw BadParameter("eta must lie in (0, 1)");
    if (n < 1 || p < 1) throw BadParameter("n and p must be positive");
    if (num_classes < 2) throw BadParameter("need at least 2 classes");
    if (!(tau > 0.0) || !(c > 0.0)) throw BadParameter("tau and C must be positive");
    return c * tau *
           std::sqrt((num_classes - 1) * std::log(static_cast<double>(p) / eta) /
                     static_cast<double>(n));
}

} // namespace slda::solver
