#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "slda/solver.hpp"
#include "slda/verify.hpp"

namespace slda::csv {

// Dense matrices travel as row-major CSV. Values are written with 17
// significant digits so a rewrite of the same numbers is byte-identical.
void write_matrix(const Eigen::MatrixXd& m, const std::string& path,
                  const std::vector<std::string>& header = {});
Eigen::MatrixXd read_matrix(const std::string& path);

void write_labels(const std::vector<int>& labels, const std::string& path);
std::vector<int> read_labels(const std::string& path);

// long-format replicate rows: experiment,n,p,K,s,lambda,replicate,metric,value
void write_report(const verify::ExperimentReport& report, const std::string& path);
// aggregated rows: n,p,K,s,lambda,metric,reps,mean,q05,q50,q95
void write_summary(const verify::ExperimentReport& report, const std::string& path);

void write_certificates(const std::vector<verify::BoundCertificate>& certificates,
                        const std::string& path);

// lambda, objective, iterations, kkt residual, active rows and the
// coefficient matrix as a CSV block
void write_fit_report(const solver::FitResult& fit, const std::string& path);

std::string format_double(double value);

} // namespace slda::csv
