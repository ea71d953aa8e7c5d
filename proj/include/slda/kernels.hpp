#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the solver and the norm computations.
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The active variant is chosen at runtime from CPU
// capabilities and can be overridden through force_isa() or the
// SLDA_KERNELS environment variable ("scalar" or "avx2"). Vector reductions
// of the two variants differ only by summation order, so results agree to
// rounding; the equivalence tests pin this down.

namespace slda::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
// true when the AVX2 variants were compiled in and the CPU supports them
bool avx2_available();
// throws BadParameter when the requested variant is unavailable
void force_isa(Isa isa);
// resets to the CPU-detected (or environment-selected) default
void reset_isa();
const char* isa_name(Isa isa);

// x . y
double dot(const double* x, const double* y, std::size_t n);
// sum of squares of x
double sq_norm(const double* x, std::size_t n);
// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);
// out[c] = x . m[:,c]; column c of m starts at m + c * stride.
// ncols is small (number of response columns), n is the long dimension.
void dot_cols(const double* x, const double* m, std::size_t n,
              std::size_t ncols, std::size_t stride, double* out);
// m[:,c] += a[c] * x
void axpy_cols(const double* a, const double* x, double* m, std::size_t n,
               std::size_t ncols, std::size_t stride);
// acc[i] += x[i]^2
void accum_sq(const double* x, double* acc, std::size_t n);
// max_i |x[i] - y[i]|
double max_abs_diff(const double* x, const double* y, std::size_t n);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double sq_norm(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void dot_cols(const double* x, const double* m, std::size_t n,
              std::size_t ncols, std::size_t stride, double* out);
void axpy_cols(const double* a, const double* x, double* m, std::size_t n,
               std::size_t ncols, std::size_t stride);
void accum_sq(const double* x, double* acc, std::size_t n);
double max_abs_diff(const double* x, const double* y, std::size_t n);
} // namespace scalar

} // namespace slda::kernels
