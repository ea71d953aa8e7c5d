#include <doctest.h>

#include <cmath>
#include <vector>

#include "slda/rng.hpp"

using slda::rng::Stream;

TEST_SUITE_BEGIN("rng");

TEST_CASE("identical seeds reproduce the sequence exactly") {
    Stream a(42, 7);
    Stream b(42, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different stream ids decorrelate") {
    Stream a(42, 0);
    Stream b(42, 1);
    int matches = 0;
    for (int i = 0; i < 1000; ++i) {
        if (a.next_u64() == b.next_u64()) ++matches;
    }
    CHECK(matches == 0);
}

TEST_CASE("substreams are independent of the parent position") {
    Stream parent(9, 3);
    const Stream child_early = parent.substream(5);
    for (int i = 0; i < 100; ++i) parent.next_u64();
    Stream child_late = parent.substream(5);
    Stream child_copy = child_early;
    for (int i = 0; i < 100; ++i) CHECK(child_late.next_u64() == child_copy.next_u64());
}

TEST_CASE("uniform moments") {
    Stream stream(123, 0);
    const int n = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = stream.next_uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum_sq += u * u;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.005);
    CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("normal moments") {
    Stream stream(321, 0);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = stream.next_normal();
        sum += z;
        sum2 += z * z;
        sum3 += z * z * z;
        sum4 += z * z * z * z;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sum2 / n - 1.0) < 0.03);
    CHECK(std::abs(sum3 / n) < 0.08);
    CHECK(std::abs(sum4 / n - 3.0) < 0.2);
}

TEST_CASE("next_below stays in range and covers all residues") {
    Stream stream(55, 0);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = stream.next_below(7);
        REQUIRE(v < 7);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int count : counts) CHECK(count > 800);
}

TEST_SUITE_END();
