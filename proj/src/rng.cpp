#include "slda/rng.hpp"

#include <cmath>

namespace slda::rng {

namespace {

constexpr std::uint64_t kMultiplier = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

inline void philox_round(std::uint64_t& x0, std::uint64_t& x1, std::uint64_t key) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(kMultiplier) * x0;
    const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
    const std::uint64_t lo = static_cast<std::uint64_t>(prod);
    x0 = hi ^ key ^ x1;
    x1 = lo;
}

inline void philox_block(std::uint64_t key, std::uint64_t c0, std::uint64_t c1,
                         std::uint64_t out[2]) {
    std::uint64_t x0 = c0;
    std::uint64_t x1 = c1;
    for (int round = 0; round < 10; ++round) {
        philox_round(x0, x1, key);
        key += kWeyl;
    }
    out[0] = x0;
    out[1] = x1;
}

} // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id)
    : Stream(seed, stream_id, mix64(seed ^ 0xA5A5A5A5A5A5A5A5ULL), mix64(stream_id + 1)) {}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t key, std::uint64_t path)
    : seed_(seed), stream_id_(stream_id), key_(key), path_(path) {}

Stream Stream::substream(std::uint64_t index) const {
    return Stream(seed_, stream_id_, key_, mix64(path_ ^ mix64(index + 0x51EDULL)));
}

void Stream::refill() {
    philox_block(key_, block_, path_, buffer_);
    ++block_;
    buffered_ = 2;
}

std::uint64_t Stream::next_u64() {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
}

double Stream::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Stream::next_below(std::uint64_t bound) {
    // rejection from the top of the range keeps the draw unbiased
    const std::uint64_t limit = bound * (~0ULL / bound);
    std::uint64_t value = next_u64();
    while (value >= limit) value = next_u64();
    return value % bound;
}

double Stream::next_normal() {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * next_uniform() - 1.0;
        v = 2.0 * next_uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * factor;
    has_spare_normal_ = true;
    return u * factor;
}

} // namespace slda::rng
