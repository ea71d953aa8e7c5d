#pragma once

#include <Eigen/Dense>
#include <vector>

namespace slda::scores {

// One-hot class membership matrix Z (n x K) with per-class counts.
struct ClassIndicator {
    Eigen::MatrixXd z;
    Eigen::VectorXi class_counts;
    int n = 0;

    int num_classes() const { return static_cast<int>(class_counts.size()); }
};

// K x (K-1) score matrix. Column l carries a common positive value on the
// first l classes, a negative value on class l+1 and zeros below, so that
// theta' Z'Z theta = n I and theta' Z'Z 1 = 0 hold by construction.
struct ScoreMatrix {
    Eigen::MatrixXd theta;
};

struct ConstraintCertificate {
    double max_orthogonality_violation = 0.0;
    double max_centering_violation = 0.0;
    bool pass = false;
};

// labels are 1-based in {1..K}; every class must occur
ClassIndicator indicator_matrix(const std::vector<int>& labels, int num_classes);

ScoreMatrix build_score_matrix(const Eigen::VectorXi& class_counts);

// reports |theta' Z'Z theta - nI|_inf and |theta' Z'Z 1|_inf by explicit
// multiplication; pass iff both are <= tol
ConstraintCertificate verify_score_constraints(const ScoreMatrix& theta, const ClassIndicator& z,
                                               double tol);

// Y = Z theta; row i repeats the score row of sample i's class
Eigen::MatrixXd transformed_response(const ClassIndicator& z, const ScoreMatrix& theta);

} // namespace slda::scores
