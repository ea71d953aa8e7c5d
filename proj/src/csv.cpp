#include "slda/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "slda/errors.hpp"

namespace slda::csv {

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read: " + path);
    return in;
}

bool looks_numeric(const std::string& field) {
    std::istringstream probe(field);
    double value;
    probe >> value;
    return static_cast<bool>(probe) && probe.eof();
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        const auto first = field.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            fields.emplace_back();
        } else {
            const auto last = field.find_last_not_of(" \t\r");
            fields.push_back(field.substr(first, last - first + 1));
        }
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

} // namespace

void write_matrix(const Eigen::MatrixXd& m, const std::string& path,
                  const std::vector<std::string>& header) {
    std::ofstream out = open_out(path);
    if (!header.empty()) {
        if (static_cast<Eigen::Index>(header.size()) != m.cols()) {
            throw BadParameter("header width does not match the matrix");
        }
        for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
        out << "\n";
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << (j ? "," : "") << format_double(m(i, j));
        }
        out << "\n";
    }
    if (!out) throw IoError("failed writing: " + path);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_fields(line);
        if (first) {
            first = false;
            // an optional header line is skipped when any field is non-numeric
            bool header = false;
            for (const std::string& field : fields) {
                if (!field.empty() && !looks_numeric(field)) header = true;
            }
            if (header) continue;
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& field : fields) {
            if (field.empty()) throw IoError(path + ": empty CSV field");
            std::istringstream value(field);
            double v;
            if (!(value >> v)) throw IoError(path + ": bad numeric field '" + field + "'");
            row.push_back(v);
        }
        if (!rows.empty() && rows.front().size() != row.size()) {
            throw IoError(path + ": ragged CSV rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": no data rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

void write_labels(const std::vector<int>& labels, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "label\n";
    for (int label : labels) out << label << "\n";
    if (!out) throw IoError("failed writing: " + path);
}

std::vector<int> read_labels(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<int> labels;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (first && !looks_numeric(split_fields(line).front())) {
            first = false;
            continue;
        }
        first = false;
        labels.push_back(std::stoi(line));
    }
    if (labels.empty()) throw IoError(path + ": no labels");
    return labels;
}

void write_report(const verify::ExperimentReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "experiment,n,p,K,s,lambda,replicate,metric,value\n";
    for (const verify::ReplicateRow& row : report.rows) {
        out << report.experiment << ',' << row.n << ',' << row.p << ',' << row.num_classes << ','
            << row.s << ',' << format_double(row.lambda) << ',' << row.replicate << ','
            << row.metric << ',' << format_double(row.value) << "\n";
    }
    if (!out) throw IoError("failed writing: " + path);
}

void write_summary(const verify::ExperimentReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "n,p,K,s,lambda,metric,reps,mean,q05,q50,q95\n";
    for (const verify::SummaryRow& row : report.summary) {
        out << row.n << ',' << row.p << ',' << row.num_classes << ',' << row.s << ','
            << format_double(row.lambda) << ',' << row.metric << ',' << row.reps << ','
            << format_double(row.mean) << ',' << format_double(row.q05) << ','
            << format_double(row.q50) << ',' << format_double(row.q95) << "\n";
    }
    if (!out) throw IoError("failed writing: " + path);
}

void write_certificates(const std::vector<verify::BoundCertificate>& certificates,
                        const std::string& path) {
    std::ofstream out = open_out(path);
    out << "name,lhs,rhs,holds,hypothesis_met,hypothesis\n";
    for (const verify::BoundCertificate& cert : certificates) {
        out << cert.name << ',' << format_double(cert.lhs) << ',' << format_double(cert.rhs) << ','
            << (cert.holds ? 1 : 0) << ',' << (cert.hypothesis_met ? 1 : 0) << ','
            << cert.hypothesis << "\n";
    }
    if (!out) throw IoError("failed writing: " + path);
}

void write_fit_report(const solver::FitResult& fit, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "lambda," << format_double(fit.lambda) << "\n";
    out << "objective," << format_double(fit.objective) << "\n";
    out << "iterations," << fit.iterations << "\n";
    out << "kkt_residual," << format_double(fit.kkt_residual) << "\n";
    out << "converged," << (fit.converged ? 1 : 0) << "\n";
    out << "active_rows";
    for (int row : fit.active_rows) out << ',' << row;
    out << "\n";
    out << "b_hat\n";
    for (Eigen::Index i = 0; i < fit.b_hat.rows(); ++i) {
        for (Eigen::Index j = 0; j < fit.b_hat.cols(); ++j) {
            out << (j ? "," : "") << format_double(fit.b_hat(i, j));
        }
        out << "\n";
    }
    if (!out) throw IoError("failed writing: " + path);
}

} // namespace slda::csv
