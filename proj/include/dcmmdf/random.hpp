#pragma once

// Counter-based random numbers. A Philox4x32-10 generator keyed by a 64-bit
// seed; independent streams are addressed by a 64-bit stream id placed in the
// upper counter words, so (seed, i, j) names one reproducible stream per
// matrix entry regardless of traversal order or thread count.

#include <array>
#include <cstdint>
#include <limits>

namespace dcmmdf {

class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Philox4x32() : Philox4x32(0, 0) {}

    explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    result_type operator()() {
        if (pos_ == 4) {
            block_ = bijection(ctr_, key_);
            pos_ = 0;
            if (++ctr_[0] == 0) ++ctr_[1];
        }
        return block_[pos_++];
    }

    // Uniform double on the open interval (0, 1) with 53 random bits.
    double uniform() {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    void discard(std::uint64_t z) {
        while (z--) (*this)();
    }

    // The raw 10-round Philox bijection.
    static counter_type bijection(counter_type ctr, key_type key) {
        constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }

private:
    key_type key_;
    counter_type ctr_;
    counter_type block_{};
    int pos_ = 4;
};

// SplitMix64 finalizer; used to fold several integers into one seed or stream id.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b + 0x632BE59BD9B4E019ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return derive_seed(derive_seed(a, b), c);
}

// Stream id for the unordered pair (i, j), i <= j.
constexpr std::uint64_t entry_stream(std::uint64_t i, std::uint64_t j) {
    return (i << 32) | (j & 0xFFFFFFFFull);
}

} // namespace dcmmdf
