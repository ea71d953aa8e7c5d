#include "slda/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "slda/errors.hpp"

namespace slda::kernels {

#if defined(SLDA_HAVE_AVX2_TU)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double sq_norm(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void dot_cols(const double* x, const double* m, std::size_t n,
              std::size_t ncols, std::size_t stride, double* out);
void axpy_cols(const double* a, const double* x, double* m, std::size_t n,
               std::size_t ncols, std::size_t stride);
void accum_sq(const double* x, double* acc, std::size_t n);
double max_abs_diff(const double* x, const double* y, std::size_t n);
} // namespace avx2
#endif

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sq_norm)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*dot_cols)(const double*, const double*, std::size_t, std::size_t, std::size_t, double*);
    void (*axpy_cols)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
    void (*accum_sq)(const double*, double*, std::size_t);
    double (*max_abs_diff)(const double*, const double*, std::size_t);
};

constexpr Table kScalarTable = {
    scalar::dot,      scalar::sq_norm,  scalar::axpy,        scalar::dot_cols,
    scalar::axpy_cols, scalar::accum_sq, scalar::max_abs_diff,
};

#if defined(SLDA_HAVE_AVX2_TU)
constexpr Table kAvx2Table = {
    avx2::dot,      avx2::sq_norm,  avx2::axpy,        avx2::dot_cols,
    avx2::axpy_cols, avx2::accum_sq, avx2::max_abs_diff,
};
#endif

bool cpu_has_avx2() {
#if defined(SLDA_HAVE_AVX2_TU) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect_default() {
    if (const char* env = std::getenv("SLDA_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Isa::avx2;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<const Table*> g_table{nullptr};
std::atomic<Isa> g_isa{Isa::scalar};

const Table* table_for(Isa isa) {
#if defined(SLDA_HAVE_AVX2_TU)
    if (isa == Isa::avx2) return &kAvx2Table;
#endif
    (void)isa;
    return &kScalarTable;
}

const Table& active() {
    const Table* t = g_table.load(std::memory_order_acquire);
    if (t == nullptr) {
        const Isa isa = detect_default();
        g_isa.store(isa, std::memory_order_relaxed);
        t = table_for(isa);
        g_table.store(t, std::memory_order_release);
    }
    return *t;
}

} // namespace

Isa active_isa() {
    active();
    return g_isa.load(std::memory_order_relaxed);
}

bool avx2_available() { return cpu_has_avx2(); }

void force_isa(Isa isa) {
    if (isa == Isa::avx2 && !cpu_has_avx2()) {
        throw BadParameter("avx2 kernels are not available on this machine");
    }
    g_isa.store(isa, std::memory_order_relaxed);
    g_table.store(table_for(isa), std::memory_order_release);
}

void reset_isa() {
    const Isa isa = detect_default();
    g_isa.store(isa, std::memory_order_relaxed);
    g_table.store(table_for(isa), std::memory_order_release);
}

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }

double sq_norm(const double* x, std::size_t n) { return active().sq_norm(x, n); }

void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }

void dot_cols(const double* x, const double* m, std::size_t n, std::size_t ncols,
              std::size_t stride, double* out) {
    active().dot_cols(x, m, n, ncols, stride, out);
}

void axpy_cols(const double* a, const double* x, double* m, std::size_t n, std::size_t ncols,
               std::size_t stride) {
    active().axpy_cols(a, x, m, n, ncols, stride);
}

void accum_sq(const double* x, double* acc, std::size_t n) { active().accum_sq(x, acc, n); }

double max_abs_diff(const double* x, const double* y, std::size_t n) {
    return active().max_abs_diff(x, y, n);
}

} // namespace slda::kernels
