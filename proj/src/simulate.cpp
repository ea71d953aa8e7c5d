#include "slda/simulate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "slda/errors.hpp"

namespace slda::simulate {

namespace {

constexpr int kMaxRedraws = 100;

std::vector<int> multinomial_labels(const Eigen::VectorXd& pi, int n, rng::Stream& stream) {
    const int k = static_cast<int>(pi.size());
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = stream.next_uniform();
        double cum = 0.0;
        int label = k;
        for (int j = 0; j < k; ++j) {
            cum += pi(j);
            if (u < cum) {
                label = j + 1;
                break;
            }
        }
        labels[static_cast<std::size_t>(i)] = label;
    }
    return labels;
}

std::vector<int> stratified_labels(const Eigen::VectorXd& pi, int n, rng::Stream& stream) {
    const int k = static_cast<int>(pi.size());
    // largest-remainder allocation of n across classes
    std::vector<int> counts(static_cast<std::size_t>(k));
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (int j = 0; j < k; ++j) {
        const double exact = pi(j) * n;
        counts[static_cast<std::size_t>(j)] = static_cast<int>(std::floor(exact));
        assigned += counts[static_cast<std::size_t>(j)];
        remainders.emplace_back(exact - std::floor(exact), j);
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int extra = 0; extra < n - assigned; ++extra) {
        ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(extra)].second)];
    }
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < k; ++j) {
        labels.insert(labels.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]),
                      j + 1);
    }
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(stream.next_below(static_cast<std::uint64_t>(i + 1)));
        std::swap(labels[static_cast<std::size_t>(i)], labels[j]);
    }
    return labels;
}

} // namespace

std::vector<int> sample_labels(const Eigen::VectorXd& pi, int n, rng::Stream& stream,
                               LabelScheme scheme) {
    if (n < 1) throw BadParameter("need at least one sample");
    return scheme == LabelScheme::multinomial ? multinomial_labels(pi, n, stream)
                                              : stratified_labels(pi, n, stream);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> center_columns(const Eigen::MatrixXd& x_raw) {
    if (x_raw.rows() < 1) throw BadParameter("cannot center an empty matrix");
    Eigen::VectorXd means = x_raw.colwise().mean();
    Eigen::MatrixXd centered = x_raw;
    centered.rowwise() -= means.transpose();
    return {std::move(centered), std::move(means)};
}

Sampler::Sampler(const population::PopulationModel& model) : model_(model) {
    population::validate(model_);
    const int p = model_.dim();
    bool diagonal = true;
    for (int i = 0; i < p && diagonal; ++i) {
        for (int j = 0; j < i; ++j) {
            if (model_.sigma_w(i, j) != 0.0) {
                diagonal = false;
                break;
            }
        }
    }
    if (diagonal) {
        diag_scale_ = model_.sigma_w.diagonal().cwiseSqrt();
        structure_ = (diag_scale_.array() == 1.0).all() ? Structure::identity : Structure::diagonal;
    } else {
        structure_ = Structure::dense;
        Eigen::LLT<Eigen::MatrixXd> llt(model_.sigma_w);
        if (llt.info() != Eigen::Success) {
            throw InvalidModel("sigma_w must be positive definite");
        }
        chol_lower_ = llt.matrixL();
    }
}

Eigen::VectorXd Sampler::draw_feature(rng::Stream& stream) const {
    const int p = model_.dim();
    const int k = model_.num_classes();
    const double u = stream.next_uniform();
    double cum = 0.0;
    int label = k - 1;
    for (int j = 0; j < k; ++j) {
        cum += model_.pi(j);
        if (u < cum) {
            label = j;
            break;
        }
    }
    Eigen::VectorXd noise(p);
    for (int j = 0; j < p; ++j) noise(j) = stream.next_normal();
    switch (structure_) {
        case Structure::identity: break;
        case Structure::diagonal: noise.array() *= diag_scale_.array(); break;
        case Structure::dense: noise = chol_lower_.triangularView<Eigen::Lower>() * noise; break;
    }
    return model_.means.col(label) + noise;
}

Dataset Sampler::sample(int n, std::uint64_t seed, std::uint64_t stream_id,
                        LabelScheme scheme) const {
    const int p = model_.dim();
    const int k = model_.num_classes();
    if (n < k) throw BadParameter("need at least one sample per class");

    rng::Stream root(seed, stream_id);
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        rng::Stream stream = root.substream(static_cast<std::uint64_t>(attempt));
        std::vector<int> labels = sample_labels(model_.pi, n, stream, scheme);
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
        for (int label : labels) ++counts(label - 1);
        if ((counts.array() == 0).any()) continue;

        Eigen::MatrixXd x_raw(n, p);
        Eigen::VectorXd noise(p);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) noise(j) = stream.next_normal();
            switch (structure_) {
                case Structure::identity: break;
                case Structure::diagonal: noise.array() *= diag_scale_.array(); break;
                case Structure::dense:
                    noise = chol_lower_.triangularView<Eigen::Lower>() * noise;
                    break;
            }
            x_raw.row(i) = (model_.means.col(labels[static_cast<std::size_t>(i)] - 1) + noise)
                               .transpose();
        }

        Dataset out;
        out.labels = std::move(labels);
        out.z = scores::indicator_matrix(out.labels, k);
        out.y = scores::transformed_response(out.z, scores::build_score_matrix(out.z.class_counts));
        auto centered = center_columns(x_raw);
        out.x = std::move(centered.first);
        out.column_means = std::move(centered.second);
        out.seed = seed;
        out.stream_id = stream_id;
        return out;
    }
    throw EmptyClassAfterRetries("a class stayed empty after " + std::to_string(kMaxRedraws) +
                                 " redraws");
}

Dataset sample_dataset(const population::PopulationModel& model, int n, std::uint64_t seed,
                       std::uint64_t stream_id, LabelScheme scheme) {
    return Sampler(model).sample(n, seed, stream_id, scheme);
}

double holdout_risk_estimate(const population::PopulationModel& model,
                             const Eigen::MatrixXd& b_hat, const Eigen::MatrixXd& b_star, int m,
                             std::uint64_t seed) {
    if (m < 1) throw BadParameter("need at least one holdout draw");
    if (b_hat.rows() != b_star.rows() || b_hat.cols() != b_star.cols()) {
        throw DimensionMismatch("coefficient matrices differ in shape");
    }
    if (b_hat.rows() != model.dim()) throw DimensionMismatch("coefficients do not match the model");
    const Eigen::MatrixXd diff = b_hat - b_star;
    if (diff.isZero(0.0)) return 0.0;
    Sampler sampler(model);
    rng::Stream stream(seed, 0x401d);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        total += (diff.transpose() * sampler.draw_feature(stream)).squaredNorm();
    }
    return total / static_cast<double>(m);
}

} // namespace slda::simulate
