#include "slda/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace slda::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sq_norm(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void dot_cols(const double* x, const double* m, std::size_t n,
              std::size_t ncols, std::size_t stride, double* out) {
    for (std::size_t c = 0; c < ncols; ++c) out[c] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        for (std::size_t c = 0; c < ncols; ++c) out[c] += xi * m[c * stride + i];
    }
}

void axpy_cols(const double* a, const double* x, double* m, std::size_t n,
               std::size_t ncols, std::size_t stride) {
    for (std::size_t c = 0; c < ncols; ++c) {
        const double ac = a[c];
        double* col = m + c * stride;
        for (std::size_t i = 0; i < n; ++i) col[i] += ac * x[i];
    }
}

void accum_sq(const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * x[i];
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, std::abs(x[i] - y[i]));
    return best;
}

} // namespace slda::kernels::scalar
