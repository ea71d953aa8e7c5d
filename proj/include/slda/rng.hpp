#pragma once

#include <cstdint>

namespace slda::rng {

// Counter-based pseudorandom stream (Philox-style 2x64 bijection, 10
// rounds). A stream is identified by (seed, path); the block counter
// advances as numbers are drawn, so a stream is a pure function of its
// identity and position. Streams derived for different replicate indices
// are disjoint by construction, which is what makes the Monte Carlo
// harness reproducible under any thread schedule.
class Stream {
  public:
    explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();
    // uniform on [0, 1), 53 random bits
    double next_uniform();
    // standard normal via the polar rejection method
    double next_normal();
    // uniform integer in [0, bound) without modulo bias
    std::uint64_t next_below(std::uint64_t bound);

    // independent child stream; index selects among 2^64 children
    Stream substream(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    Stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t key, std::uint64_t path);
    void refill();

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t path_ = 0;     // counter high word: stream identity
    std::uint64_t block_ = 0;    // counter low word: position
    std::uint64_t buffer_[2] = {0, 0};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

// splitmix64 finalizer; used for key/path derivation and exposed for
// deterministic hashing needs elsewhere
std::uint64_t mix64(std::uint64_t x);

} // namespace slda::rng
