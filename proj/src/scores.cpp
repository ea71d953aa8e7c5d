#include "slda/scores.hpp"

#include <cmath>
#include <string>

#include "slda/errors.hpp"

namespace slda::scores {

ClassIndicator indicator_matrix(const std::vector<int>& labels, int num_classes) {
    if (num_classes < 1) throw BadParameter("num_classes must be positive");
    const int n = static_cast<int>(labels.size());
    ClassIndicator out;
    out.n = n;
    out.z = Eigen::MatrixXd::Zero(n, num_classes);
    out.class_counts = Eigen::VectorXi::Zero(num_classes);
    for (int i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 1 || label > num_classes) {
            throw BadLabel("label " + std::to_string(label) + " outside 1.." +
                           std::to_string(num_classes));
        }
        out.z(i, label - 1) = 1.0;
        ++out.class_counts(label - 1);
    }
    for (int k = 0; k < num_classes; ++k) {
        if (out.class_counts(k) == 0) {
            throw EmptyClass("class " + std::to_string(k + 1) + " has no samples");
        }
    }
    return out;
}

ScoreMatrix build_score_matrix(const Eigen::VectorXi& class_counts) {
    const int k = static_cast<int>(class_counts.size());
    if (k < 2) throw TooFewClasses("need at least 2 classes, got " + std::to_string(k));
    double n = 0.0;
    for (int j = 0; j < k; ++j) {
        if (class_counts(j) < 1) {
            throw EmptyClass("class " + std::to_string(j + 1) + " has count 0");
        }
        n += class_counts(j);
    }
    ScoreMatrix out;
    out.theta = Eigen::MatrixXd::Zero(k, k - 1);
    double head = 0.0; // sum of counts of classes 1..l
    for (int l = 1; l <= k - 1; ++l) {
        head += class_counts(l - 1);
        const double next = class_counts(l);
        const double both = head + next;
        const double positive = std::sqrt(n * next / (head * both));
        for (int j = 0; j < l; ++j) out.theta(j, l - 1) = positive;
        out.theta(l, l - 1) = -std::sqrt(n * head / (next * both));
    }
    return out;
}

ConstraintCertificate verify_score_constraints(const ScoreMatrix& theta, const ClassIndicator& z,
                                               double tol) {
    const int k = z.num_classes();
    if (theta.theta.rows() != k || theta.theta.cols() != k - 1) {
        throw DimensionMismatch("score matrix must be K x (K-1) for this indicator");
    }
    const double n = static_cast<double>(z.n);
    const Eigen::MatrixXd ztz = z.z.transpose() * z.z;
    const Eigen::MatrixXd gram = theta.theta.transpose() * ztz * theta.theta;
    const Eigen::VectorXd centering =
        theta.theta.transpose() * ztz * Eigen::VectorXd::Ones(k);

    ConstraintCertificate cert;
    cert.max_orthogonality_violation =
        (gram - n * Eigen::MatrixXd::Identity(k - 1, k - 1)).cwiseAbs().maxCoeff();
    cert.max_centering_violation = centering.cwiseAbs().maxCoeff();
    cert.pass = cert.max_orthogonality_violation <= tol && cert.max_centering_violation <= tol;
    return cert;
}

Eigen::MatrixXd transformed_response(const ClassIndicator& z, const ScoreMatrix& theta) {
    if (theta.theta.rows() != z.num_classes()) {
        throw DimensionMismatch("score matrix rows must equal the class count");
    }
    return z.z * theta.theta;
}

} // namespace slda::scores
