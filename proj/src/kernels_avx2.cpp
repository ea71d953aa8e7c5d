// AVX2+FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; it must stay free of code reachable before the runtime
// CPU check in kernels_dispatch.cpp.

#include "slda/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace slda::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

} // namespace

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sq_norm(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d a = _mm256_loadu_pd(x + i);
        const __m256d b = _mm256_loadu_pd(x + i + 4);
        acc0 = _mm256_fmadd_pd(a, a, acc0);
        acc1 = _mm256_fmadd_pd(b, b, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(x + i);
        acc0 = _mm256_fmadd_pd(a, a, acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4,
                         _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

// One pass over x with a vector accumulator per column. The solver calls
// this with ncols = K-1 <= 7; wider inputs fall back to column-wise dot.
void dot_cols(const double* x, const double* m, std::size_t n,
              std::size_t ncols, std::size_t stride, double* out) {
    constexpr std::size_t kMaxFused = 8;
    if (ncols > kMaxFused) {
        for (std::size_t c = 0; c < ncols; ++c) out[c] = dot(x, m + c * stride, n);
        return;
    }
    __m256d acc[kMaxFused];
    for (std::size_t c = 0; c < ncols; ++c) acc[c] = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        for (std::size_t c = 0; c < ncols; ++c) {
            acc[c] = _mm256_fmadd_pd(xv, _mm256_loadu_pd(m + c * stride + i), acc[c]);
        }
    }
    for (std::size_t c = 0; c < ncols; ++c) out[c] = hsum(acc[c]);
    for (; i < n; ++i) {
        const double xi = x[i];
        for (std::size_t c = 0; c < ncols; ++c) out[c] += xi * m[c * stride + i];
    }
}

void axpy_cols(const double* a, const double* x, double* m, std::size_t n,
               std::size_t ncols, std::size_t stride) {
    for (std::size_t c = 0; c < ncols; ++c) axpy(a[c], x, m + c * stride, n);
}

void accum_sq(const double* x, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(xv, xv, _mm256_loadu_pd(acc + i)));
    }
    for (; i < n; ++i) acc[i] += x[i] * x[i];
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d best = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        best = _mm256_max_pd(best, _mm256_andnot_pd(sign_mask, d));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, best);
    double out = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < n; ++i) out = std::max(out, std::abs(x[i] - y[i]));
    return out;
}

} // namespace slda::kernels::avx2
