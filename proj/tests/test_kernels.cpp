#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "slda/kernels.hpp"
#include "slda/rng.hpp"

namespace kernels = slda::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, slda::rng::Stream& stream) {
    std::vector<double> out(n);
    for (double& v : out) v = stream.next_normal();
    return out;
}

// reductions may reassociate across variants; tolerance scales with the
// accumulated magnitude
void check_close(double a, double b, double scale) {
    CHECK(std::abs(a - b) <= 1e-12 * (1.0 + scale));
}

} // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("scalar dot and sq_norm agree with a plain loop") {
    slda::rng::Stream stream(7, 1);
    const auto x = random_vector(131, stream);
    const auto y = random_vector(131, stream);
    double expected_dot = 0.0;
    double expected_sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        expected_dot += x[i] * y[i];
        expected_sq += x[i] * x[i];
    }
    CHECK(kernels::scalar::dot(x.data(), y.data(), x.size()) == doctest::Approx(expected_dot));
    CHECK(kernels::scalar::sq_norm(x.data(), x.size()) == doctest::Approx(expected_sq));
}

TEST_CASE("dispatched variants match the scalar reference on awkward lengths") {
    if (!kernels::avx2_available()) return;
    slda::rng::Stream stream(11, 2);
    for (std::size_t n : {0UL, 1UL, 2UL, 3UL, 4UL, 5UL, 7UL, 8UL, 9UL, 15UL, 16UL, 17UL, 31UL,
                          33UL, 64UL, 100UL, 257UL, 1000UL}) {
        const auto x = random_vector(n, stream);
        const auto y = random_vector(n, stream);
        const double magnitude = n == 0 ? 0.0 : kernels::scalar::sq_norm(x.data(), n);

        kernels::force_isa(kernels::Isa::avx2);
        const double dot_avx2 = kernels::dot(x.data(), y.data(), n);
        const double sq_avx2 = kernels::sq_norm(x.data(), n);
        const double diff_avx2 = kernels::max_abs_diff(x.data(), y.data(), n);
        kernels::force_isa(kernels::Isa::scalar);
        const double dot_ref = kernels::dot(x.data(), y.data(), n);
        const double sq_ref = kernels::sq_norm(x.data(), n);
        const double diff_ref = kernels::max_abs_diff(x.data(), y.data(), n);
        kernels::reset_isa();

        check_close(dot_avx2, dot_ref, magnitude);
        check_close(sq_avx2, sq_ref, magnitude);
        CHECK(diff_avx2 == diff_ref); // max is order-independent, exact match
    }
}

TEST_CASE("axpy variants produce identical updates") {
    if (!kernels::avx2_available()) return;
    slda::rng::Stream stream(13, 3);
    for (std::size_t n : {1UL, 3UL, 8UL, 21UL, 130UL}) {
        const auto x = random_vector(n, stream);
        auto y_a = random_vector(n, stream);
        auto y_b = y_a;
        kernels::scalar::axpy(0.37, x.data(), y_a.data(), n);
        kernels::force_isa(kernels::Isa::avx2);
        kernels::axpy(0.37, x.data(), y_b.data(), n);
        kernels::reset_isa();
        for (std::size_t i = 0; i < n; ++i) {
            // same fused sequence per element, results are bit-equal
            CHECK(y_a[i] == doctest::Approx(y_b[i]).epsilon(1e-15));
        }
    }
}

TEST_CASE("fused column kernels match per-column loops across widths") {
    if (!kernels::avx2_available()) return;
    slda::rng::Stream stream(17, 4);
    const std::size_t n = 203;
    const std::size_t stride = 210; // deliberately larger than n
    for (std::size_t ncols : {1UL, 2UL, 3UL, 4UL, 7UL, 8UL, 9UL}) {
        const auto x = random_vector(n, stream);
        const auto m = random_vector(stride * ncols, stream);
        std::vector<double> out_ref(ncols);
        std::vector<double> out_avx2(ncols);
        kernels::scalar::dot_cols(x.data(), m.data(), n, ncols, stride, out_ref.data());
        kernels::force_isa(kernels::Isa::avx2);
        kernels::dot_cols(x.data(), m.data(), n, ncols, stride, out_avx2.data());
        kernels::reset_isa();
        for (std::size_t c = 0; c < ncols; ++c) check_close(out_avx2[c], out_ref[c], n);

        const auto coefs = random_vector(ncols, stream);
        auto m_ref = m;
        auto m_avx2 = m;
        kernels::scalar::axpy_cols(coefs.data(), x.data(), m_ref.data(), n, ncols, stride);
        kernels::force_isa(kernels::Isa::avx2);
        kernels::axpy_cols(coefs.data(), x.data(), m_avx2.data(), n, ncols, stride);
        kernels::reset_isa();
        for (std::size_t i = 0; i < m_ref.size(); ++i) {
            CHECK(std::abs(m_ref[i] - m_avx2[i]) <= 1e-14);
        }
    }
}

TEST_CASE("accum_sq accumulates into the target") {
    slda::rng::Stream stream(19, 5);
    const std::size_t n = 77;
    const auto x = random_vector(n, stream);
    std::vector<double> acc_ref(n, 0.5);
    std::vector<double> acc_disp(n, 0.5);
    kernels::scalar::accum_sq(x.data(), acc_ref.data(), n);
    kernels::accum_sq(x.data(), acc_disp.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(acc_disp[i] == doctest::Approx(acc_ref[i]).epsilon(1e-15));
    }
}

TEST_CASE("isa selection is reported and reversible") {
    const kernels::Isa initial = kernels::active_isa();
    kernels::force_isa(kernels::Isa::scalar);
    CHECK(kernels::active_isa() == kernels::Isa::scalar);
    CHECK(std::string(kernels::isa_name(kernels::active_isa())) == "scalar");
    kernels::reset_isa();
    CHECK(kernels::active_isa() == initial);
}

TEST_SUITE_END();
