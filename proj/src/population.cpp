#include "slda/population.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "slda/errors.hpp"
#include "slda/rng.hpp"

namespace slda::population {

namespace {

constexpr double kMeanZeroTol = 1e-10;
constexpr double kSymmetryTol = 1e-8;
// rough condition estimate from the Cholesky diagonal
constexpr double kConditionLimit = 1e14;

} // namespace

void validate(PopulationModel& model, std::ostream* warnings) {
    const int k = model.num_classes();
    const int p = model.dim();
    if (k < 2) throw InvalidModel("need at least 2 classes");
    if (p < 1) throw InvalidModel("dimension must be positive");
    if (model.means.cols() != k) throw InvalidModel("means must be p x K");
    if (model.sigma_w.rows() != p || model.sigma_w.cols() != p) {
        throw InvalidModel("sigma_w must be p x p");
    }
    double pi_sum = 0.0;
    for (int j = 0; j < k; ++j) {
        if (!(model.pi(j) > 0.0)) throw InvalidModel("class probabilities must be positive");
        pi_sum += model.pi(j);
    }
    if (std::abs(pi_sum - 1.0) > 1e-8) throw InvalidModel("class probabilities must sum to 1");
    if ((model.sigma_w - model.sigma_w.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
        throw InvalidModel("sigma_w must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(model.sigma_w);
    if (llt.info() != Eigen::Success) throw InvalidModel("sigma_w must be positive definite");

    const Eigen::VectorXd overall = model.means * model.pi;
    if (overall.cwiseAbs().maxCoeff() > kMeanZeroTol) {
        if (warnings != nullptr) {
            *warnings << "warning: overall mean is nonzero (|.|_inf = "
                      << overall.cwiseAbs().maxCoeff() << "); recentering class means\n";
        }
        model.means.colwise() -= overall;
    }
}

Eigen::MatrixXd contrast_matrix(const PopulationModel& model) {
    const int k = model.num_classes();
    const int p = model.dim();
    Eigen::MatrixXd delta(p, k - 1);
    double head_pi = 0.0;         // pi_1 + ... + pi_r
    Eigen::VectorXd weighted_head = Eigen::VectorXd::Zero(p); // sum pi_k mu_k over 1..r
    for (int r = 1; r <= k - 1; ++r) {
        head_pi += model.pi(r - 1);
        weighted_head += model.pi(r - 1) * model.means.col(r - 1);
        const double next_pi = model.pi(r);
        const double both_pi = head_pi + next_pi;
        delta.col(r - 1) = std::sqrt(next_pi) *
                           (weighted_head - head_pi * model.means.col(r)) /
                           std::sqrt(head_pi * both_pi);
    }
    return delta;
}

Eigen::MatrixXd total_covariance(const PopulationModel& model) {
    Eigen::MatrixXd sigma_t = model.sigma_w;
    for (int j = 0; j < model.num_classes(); ++j) {
        sigma_t.noalias() += model.pi(j) * model.means.col(j) * model.means.col(j).transpose();
    }
    return sigma_t;
}

Eigen::MatrixXd population_coefficients(const PopulationModel& model) {
    const Eigen::MatrixXd sigma_t = total_covariance(model);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_t);
    if (llt.info() != Eigen::Success) {
        throw SingularCovariance("total covariance is not positive definite");
    }
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    const double ratio = diag.maxCoeff() / diag.minCoeff();
    if (ratio * ratio > kConditionLimit) {
        throw SingularCovariance("total covariance is numerically singular");
    }
    return llt.solve(contrast_matrix(model));
}

double tau(const PopulationModel& model) {
    double worst = 0.0;
    for (int j = 0; j < model.dim(); ++j) {
        const double max_mean_sq = model.means.row(j).cwiseAbs2().maxCoeff();
        worst = std::max(worst, model.sigma_w(j, j) + max_mean_sq);
    }
    return std::sqrt(worst);
}

std::vector<int> support_of(const Eigen::MatrixXd& b, double threshold) {
    if (threshold < 0.0) throw BadParameter("support threshold must be nonnegative");
    std::vector<int> support;
    for (int j = 0; j < b.rows(); ++j) {
        if (b.row(j).norm() > threshold) support.push_back(j);
    }
    return support;
}

double default_support_threshold(const Eigen::MatrixXd& b) {
    double max_row = 0.0;
    for (int j = 0; j < b.rows(); ++j) max_row = std::max(max_row, b.row(j).norm());
    return 1e-10 * max_row;
}

PopulationDerived derive(const PopulationModel& model) {
    PopulationDerived out;
    out.delta = contrast_matrix(model);
    out.sigma_t = total_covariance(model);
    Eigen::LLT<Eigen::MatrixXd> llt(out.sigma_t);
    if (llt.info() != Eigen::Success) {
        throw SingularCovariance("total covariance is not positive definite");
    }
    out.b_star = llt.solve(out.delta);
    out.tau = tau(model);
    out.support = support_of(out.b_star, default_support_threshold(out.b_star));
    out.s = static_cast<int>(out.support.size());
    return out;
}

namespace {

std::vector<double> parse_numbers(const std::string& line) {
    std::vector<double> out;
    std::istringstream stream(line);
    double value;
    while (stream >> value) out.push_back(value);
    return out;
}

std::string next_content_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        return line.substr(first, last - first + 1);
    }
    return {};
}

} // namespace

PopulationModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);

    int k = -1;
    int p = -1;
    PopulationModel model;
    std::string line;
    while (!(line = next_content_line(in)).empty()) {
        std::istringstream stream(line);
        std::string keyword;
        stream >> keyword;
        if (keyword == "classes") {
            stream >> k;
        } else if (keyword == "dim") {
            stream >> p;
        } else if (keyword == "pi") {
            if (k < 0) throw ConfigError("model file: 'classes' must precede 'pi'");
            model.pi.resize(k);
            for (int j = 0; j < k; ++j) {
                if (!(stream >> model.pi(j))) throw ConfigError("model file: short pi line");
            }
        } else if (keyword == "means") {
            if (k < 0 || p < 0) throw ConfigError("model file: 'classes'/'dim' must precede 'means'");
            model.means.resize(p, k);
            for (int row = 0; row < p; ++row) {
                const auto values = parse_numbers(next_content_line(in));
                if (static_cast<int>(values.size()) != k) {
                    throw ConfigError("model file: means row needs K entries");
                }
                for (int col = 0; col < k; ++col) model.means(row, col) = values[col];
            }
        } else if (keyword == "sigma_w") {
            if (p < 0) throw ConfigError("model file: 'dim' must precede 'sigma_w'");
            model.sigma_w.setZero(p, p);
            for (int row = 0; row < p; ++row) {
                const auto values = parse_numbers(next_content_line(in));
                if (static_cast<int>(values.size()) == row + 1) {
                    for (int col = 0; col <= row; ++col) {
                        model.sigma_w(row, col) = values[col];
                        model.sigma_w(col, row) = values[col];
                    }
                } else if (static_cast<int>(values.size()) == p) {
                    for (int col = 0; col < p; ++col) model.sigma_w(row, col) = values[col];
                } else {
                    throw ConfigError("model file: sigma_w row needs p or row+1 entries");
                }
            }
        } else {
            throw ConfigError("model file: unknown keyword '" + keyword + "'");
        }
    }
    if (k < 2 || p < 1 || model.pi.size() != k || model.means.size() == 0 ||
        model.sigma_w.size() == 0) {
        throw ConfigError("model file: incomplete specification");
    }
    validate(model);
    return model;
}

void save_model(const PopulationModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path);
    const int k = model.num_classes();
    const int p = model.dim();
    char buffer[32];
    const auto fmt = [&buffer](double v) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", v);
        return std::string(buffer);
    };
    out << "classes " << k << "\n";
    out << "dim " << p << "\n";
    out << "pi";
    for (int j = 0; j < k; ++j) out << ' ' << fmt(model.pi(j));
    out << "\nmeans\n";
    for (int row = 0; row < p; ++row) {
        for (int col = 0; col < k; ++col) out << (col ? " " : "") << fmt(model.means(row, col));
        out << "\n";
    }
    out << "sigma_w\n";
    for (int row = 0; row < p; ++row) {
        for (int col = 0; col <= row; ++col) out << (col ? " " : "") << fmt(model.sigma_w(row, col));
        out << "\n";
    }
    if (!out) throw IoError("failed writing model file: " + path);
}

namespace {

// means drawn from a fixed stream; validate() recenters them afterwards,
// which keeps the row support intact
Eigen::MatrixXd random_means(int p, int k, int active_rows, double separation,
                             rng::Stream stream) {
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(p, k);
    for (int row = 0; row < active_rows; ++row) {
        for (int col = 0; col < k; ++col) means(row, col) = separation * stream.next_normal();
    }
    return means;
}

} // namespace

PopulationModel make_dense_model(int p, int num_classes, double separation, std::uint64_t seed) {
    PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(num_classes, 1.0 / num_classes);
    model.means = random_means(p, num_classes, p, separation, rng::Stream(seed, 0x9d));
    model.sigma_w.setZero(p, p);
    // mild AR(1) correlation keeps the model dense but well conditioned
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) model.sigma_w(i, j) = std::pow(0.3, std::abs(i - j));
    }
    validate(model);
    return model;
}

PopulationModel make_sparse_model(int p, int num_classes, int s, double separation,
                                  std::uint64_t seed) {
    if (s < 1 || s > p) throw BadParameter("sparsity level must lie in 1..p");
    PopulationModel model;
    model.pi = Eigen::VectorXd::Constant(num_classes, 1.0 / num_classes);
    model.sigma_w = Eigen::MatrixXd::Identity(p, p);
    // Means live on the first s coordinates. With identity within-class
    // covariance the total covariance is block diagonal, so the target
    // coefficients inherit exactly that support. Redraw until every row of
    // b_star is safely active.
    rng::Stream stream(seed, 0x5a);
    for (int attempt = 0; attempt < 64; ++attempt) {
        model.means = random_means(p, num_classes, s, separation, stream.substream(attempt));
        validate(model);
        const Eigen::MatrixXd b_star = population_coefficients(model);
        double min_active = std::numeric_limits<double>::max();
        for (int row = 0; row < s; ++row) min_active = std::min(min_active, b_star.row(row).norm());
        if (min_active > 0.2 * separation / (1.0 + separation)) return model;
    }
    throw ModelNotSparse("could not realize the requested active row norms");
}

} // namespace slda::population
