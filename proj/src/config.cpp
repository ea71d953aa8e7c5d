#include "slda/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "slda/csv.hpp"
#include "slda/errors.hpp"

namespace slda::cli {

namespace fs = std::filesystem;

const char* kind_name(Kind kind) {
    switch (kind) {
        case Kind::fit: return "fit";
        case Kind::simulate: return "simulate";
        case Kind::concentration: return "concentration";
        case Kind::slow_rate: return "slow-rate";
        case Kind::fast_rate: return "fast-rate";
        case Kind::re_constant: return "re-constant";
        case Kind::certify: return "certify";
        case Kind::classify: return "classify";
    }
    return "unknown";
}

namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

struct RawConfig {
    std::map<std::string, std::string> values; // "section.key" or "key"
    std::string source;
};

RawConfig read_raw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    RawConfig raw;
    raw.source = path;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(path + ":" + std::to_string(line_no) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (raw.values.count(full)) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key " + full);
        }
        raw.values[full] = value;
    }
    return raw;
}

class Extractor {
  public:
    explicit Extractor(RawConfig raw) : raw_(std::move(raw)) {}

    bool has(const std::string& key) const { return raw_.values.count(key) > 0; }

    std::string take(const std::string& key, const std::string& fallback) {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    double take_double(const std::string& key, double fallback) {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return fallback;
        used_.insert(key);
        return parse_double(key, it->second);
    }

    int take_int(const std::string& key, int fallback) {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return fallback;
        used_.insert(key);
        const double v = parse_double(key, it->second);
        const int out = static_cast<int>(v);
        if (static_cast<double>(out) != v) {
            throw ConfigError(raw_.source + ": key " + key + " must be an integer");
        }
        return out;
    }

    bool take_bool(const std::string& key, bool fallback) {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return fallback;
        used_.insert(key);
        std::string v = it->second;
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(raw_.source + ": key " + key + " must be a boolean");
    }

    std::vector<int> take_int_list(const std::string& key) {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return {};
        used_.insert(key);
        std::vector<int> out;
        std::istringstream stream(it->second);
        std::string token;
        while (stream >> token) {
            out.push_back(static_cast<int>(parse_double(key, token)));
        }
        return out;
    }

    void fail_on_unknown() const {
        for (const auto& [key, value] : raw_.values) {
            if (!used_.count(key)) {
                throw ConfigError(raw_.source + ": unknown key '" + key + "'");
            }
        }
    }

    const std::string& source() const { return raw_.source; }

  private:
    double parse_double(const std::string& key, const std::string& text) const {
        std::istringstream stream(text);
        double v;
        if (!(stream >> v) || !(stream >> std::ws).eof()) {
            throw ConfigError(raw_.source + ": key " + key + " has a bad numeric value '" + text +
                              "'");
        }
        return v;
    }

    RawConfig raw_;
    std::set<std::string> used_;
};

std::string resolve_path(const std::string& base_file, const std::string& path) {
    if (path.empty()) return path;
    fs::path candidate(path);
    if (candidate.is_absolute()) return candidate.lexically_normal().string();
    return (fs::path(base_file).parent_path() / candidate).lexically_normal().string();
}

bool numeric_like(const std::string& text) {
    std::istringstream stream(text);
    double v;
    return (stream >> v) && (stream >> std::ws).eof();
}

} // namespace

ExperimentConfig parse_config(const std::string& path) {
    Extractor raw(read_raw(path));
    ExperimentConfig config;
    config.source_path = path;

    const std::string kind = raw.take("kind", "");
    bool known_kind = false;
    for (Kind candidate :
         {Kind::fit, Kind::simulate, Kind::concentration, Kind::slow_rate, Kind::fast_rate,
          Kind::re_constant, Kind::certify, Kind::classify}) {
        if (kind == kind_name(candidate)) {
            config.kind = candidate;
            known_kind = true;
        }
    }
    if (!known_kind) throw ConfigError(path + ": missing or unknown kind '" + kind + "'");

    config.model_path = resolve_path(path, raw.take("model", ""));
    config.n_grid = raw.take_int_list("n_grid");
    config.reps = raw.take_int("reps", 0);
    config.eta = raw.take_double("eta", 0.05);
    const std::string c_text = raw.take("C", "calibrate");
    if (c_text == "calibrate") {
        config.calibrate_c = true;
    } else if (numeric_like(c_text)) {
        config.calibrate_c = false;
        config.c_value = std::stod(c_text);
    } else {
        throw ConfigError(path + ": C must be a number or 'calibrate'");
    }
    if (raw.has("seed")) {
        config.has_seed = true;
        const std::string seed_text = raw.take("seed", "0");
        try {
            config.seed = std::stoull(seed_text);
        } catch (const std::exception&) {
            throw ConfigError(path + ": bad seed '" + seed_text + "'");
        }
    }
    config.output_dir = resolve_path(path, raw.take("output", ""));
    config.threads = raw.take_int("threads", 0);

    config.solver.tolerance = raw.take_double("solver.tolerance", config.solver.tolerance);
    config.solver.max_iterations =
        raw.take_int("solver.max_iterations", config.solver.max_iterations);
    config.solver.algorithm = raw.take("solver.algorithm", config.solver.algorithm);
    config.solver.standardize = raw.take_bool("solver.standardize", config.solver.standardize);

    config.fit_design = resolve_path(path, raw.take("fit.design", ""));
    config.fit_response = resolve_path(path, raw.take("fit.response", ""));
    config.fit_labels = resolve_path(path, raw.take("fit.labels", ""));
    config.fit_lambda = raw.take("fit.lambda", "max");

    config.simulate_n = raw.take_int("simulate.n", 0);

    config.fast_s = raw.take_int("fast-rate.s", 0);

    const std::string re_q = raw.take("re.q", "");
    config.re_q = (re_q == "sigma-half" || re_q.empty()) ? re_q : resolve_path(path, re_q);
    config.re_s = raw.take_int("re.s", 1);
    config.re_c = raw.take_double("re.c", 3.0);
    config.re_classes = raw.take_int("re.classes", 2);
    config.re_method = raw.take("re.method", "auto");

    config.certify_n = raw.take_int("certify.n", 0);
    config.certify_multiplier = raw.take_double("certify.multiplier", 2.5);
    config.certify_sparsity = raw.take_bool("certify.sparsity", true);

    config.classify_train = raw.take_int("classify.n_train", 0);
    config.classify_test = raw.take_int("classify.n_test", 0);
    config.classify_lambda = raw.take("classify.lambda", "theoretical");

    raw.fail_on_unknown();
    return config;
}

std::vector<std::string> validate_config(const ExperimentConfig& config) {
    std::vector<std::string> issues;
    const auto need_file = [&issues](const std::string& what, const std::string& path) {
        if (path.empty()) {
            issues.push_back(what + " is required");
        } else if (!fs::exists(path)) {
            issues.push_back(what + " does not exist: " + path);
        }
    };

    if (!config.has_seed) issues.push_back("seed is required (no entropy fallback)");
    if (config.output_dir.empty()) issues.push_back("output directory is required");
    if (!(config.eta > 0.0) || !(config.eta < 1.0)) issues.push_back("eta must lie in (0,1)");
    if (!config.calibrate_c && !(config.c_value > 0.0)) issues.push_back("C must be positive");
    if (config.threads < 0) issues.push_back("threads must be nonnegative");
    if (!(config.solver.tolerance > 0.0)) issues.push_back("solver.tolerance must be positive");
    if (config.solver.max_iterations < 1) issues.push_back("solver.max_iterations must be >= 1");
    if (config.solver.algorithm != "bcd" && config.solver.algorithm != "pg") {
        issues.push_back("solver.algorithm must be 'bcd' or 'pg'");
    }

    const bool needs_model = config.kind != Kind::fit &&
                             !(config.kind == Kind::re_constant && config.re_q != "sigma-half" &&
                               !config.re_q.empty());
    if (needs_model) need_file("model file", config.model_path);

    const auto need_grid = [&issues, &config]() {
        if (config.n_grid.empty()) issues.push_back("n_grid is required");
        for (int n : config.n_grid) {
            if (n < 1) issues.push_back("n_grid values must be positive");
        }
        if (config.reps < 1) issues.push_back("reps must be >= 1");
    };

    switch (config.kind) {
        case Kind::fit:
            need_file("fit.design", config.fit_design);
            if (config.fit_response.empty() && config.fit_labels.empty()) {
                issues.push_back("fit needs fit.response or fit.labels");
            } else if (!config.fit_response.empty() && !config.fit_labels.empty()) {
                issues.push_back("fit.response and fit.labels are mutually exclusive");
            } else if (!config.fit_response.empty()) {
                need_file("fit.response", config.fit_response);
            } else {
                need_file("fit.labels", config.fit_labels);
            }
            if (config.fit_lambda != "max" && !numeric_like(config.fit_lambda)) {
                issues.push_back("fit.lambda must be 'max' or a number");
            } else if (numeric_like(config.fit_lambda) && std::stod(config.fit_lambda) < 0.0) {
                issues.push_back("fit.lambda must be nonnegative");
            }
            break;
        case Kind::simulate:
            if (config.simulate_n < 1) issues.push_back("simulate.n must be >= 1");
            break;
        case Kind::concentration:
            need_grid();
            if (config.reps > 0 && config.reps < 50) {
                issues.push_back("concentration needs reps >= 50 for a usable quantile");
            }
            break;
        case Kind::slow_rate:
            need_grid();
            break;
        case Kind::fast_rate:
            need_grid();
            if (config.fast_s < 1) issues.push_back("fast-rate.s must be >= 1");
            break;
        case Kind::re_constant:
            if (config.re_q.empty()) issues.push_back("re.q is required ('sigma-half' or a CSV)");
            if (config.re_q != "sigma-half" && !config.re_q.empty()) need_file("re.q", config.re_q);
            if (config.re_s < 1) issues.push_back("re.s must be >= 1");
            if (config.re_c < 0.0) issues.push_back("re.c must be nonnegative");
            if (config.re_classes < 2) issues.push_back("re.classes must be >= 2");
            if (config.re_method != "auto" && config.re_method != "exhaustive" &&
                config.re_method != "sampled") {
                issues.push_back("re.method must be auto, exhaustive or sampled");
            }
            break;
        case Kind::certify:
            if (config.certify_n < 2) issues.push_back("certify.n must be >= 2");
            if (config.reps < 1) issues.push_back("reps must be >= 1");
            if (!(config.certify_multiplier > 0.0)) {
                issues.push_back("certify.multiplier must be positive");
            }
            break;
        case Kind::classify:
            if (config.classify_train < 2) issues.push_back("classify.n_train must be >= 2");
            if (config.classify_test < 1) issues.push_back("classify.n_test must be >= 1");
            if (config.classify_lambda != "theoretical" && !numeric_like(config.classify_lambda)) {
                issues.push_back("classify.lambda must be 'theoretical' or a number");
            }
            break;
    }
    return issues;
}

void write_manifest(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << "kind = " << kind_name(config.kind) << "\n";
    if (!config.model_path.empty()) out << "model = " << config.model_path << "\n";
    if (!config.n_grid.empty()) {
        out << "n_grid =";
        for (int n : config.n_grid) out << ' ' << n;
        out << "\n";
    }
    if (config.reps > 0) out << "reps = " << config.reps << "\n";
    out << "eta = " << csv::format_double(config.eta) << "\n";
    if (config.calibrate_c) {
        out << "C = calibrate\n";
    } else {
        out << "C = " << csv::format_double(config.c_value) << "\n";
    }
    out << "seed = " << config.seed << "\n";
    out << "output = " << config.output_dir << "\n";
    out << "threads = " << config.threads << "\n";
    out << "\n[solver]\n";
    out << "tolerance = " << csv::format_double(config.solver.tolerance) << "\n";
    out << "max_iterations = " << config.solver.max_iterations << "\n";
    out << "algorithm = " << config.solver.algorithm << "\n";
    out << "standardize = " << (config.solver.standardize ? "true" : "false") << "\n";
    switch (config.kind) {
        case Kind::fit:
            out << "\n[fit]\n";
            out << "design = " << config.fit_design << "\n";
            if (!config.fit_response.empty()) out << "response = " << config.fit_response << "\n";
            if (!config.fit_labels.empty()) out << "labels = " << config.fit_labels << "\n";
            out << "lambda = " << config.fit_lambda << "\n";
            break;
        case Kind::simulate:
            out << "\n[simulate]\n";
            out << "n = " << config.simulate_n << "\n";
            break;
        case Kind::fast_rate:
            out << "\n[fast-rate]\n";
            out << "s = " << config.fast_s << "\n";
            break;
        case Kind::re_constant:
            out << "\n[re]\n";
            out << "q = " << config.re_q << "\n";
            out << "s = " << config.re_s << "\n";
            out << "c = " << csv::format_double(config.re_c) << "\n";
            out << "classes = " << config.re_classes << "\n";
            out << "method = " << config.re_method << "\n";
            break;
        case Kind::certify:
            out << "\n[certify]\n";
            out << "n = " << config.certify_n << "\n";
            out << "multiplier = " << csv::format_double(config.certify_multiplier) << "\n";
            out << "sparsity = " << (config.certify_sparsity ? "true" : "false") << "\n";
            break;
        case Kind::classify:
            out << "\n[classify]\n";
            out << "n_train = " << config.classify_train << "\n";
            out << "n_test = " << config.classify_test << "\n";
            out << "lambda = " << config.classify_lambda << "\n";
            break;
        case Kind::concentration:
        case Kind::slow_rate:
            break;
    }
    if (!out) throw IoError("failed writing manifest: " + path);
}

} // namespace slda::cli
