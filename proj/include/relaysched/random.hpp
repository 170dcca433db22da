#pragma once

#include <cmath>
#include <cstdint>

namespace relaysched {

// SplitMix64 finalizer. Full-avalanche mix of a 64-bit word.
inline constexpr std::uint64_t mix_u64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent 64-bit seed from (seed, tag). Used to give sweep
// points and simulation runs their own streams.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix_u64(mix_u64(seed + 0x9e3779b97f4a7c15ull) ^ mix_u64(tag ^ 0xd1b54a32d192ed03ull));
}

// Counter-based uniform random stream (SplitMix64 sequence). The value at
// counter c is a pure function of (key, c), so draws can be addressed by
// slot index and streams can be split without touching each other.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
        : key_(derive_seed(seed, stream_id)) {}

    std::uint64_t next_u64() noexcept {
        return mix_u64(key_ + 0x9e3779b97f4a7c15ull * ++counter_);
    }

    // Uniform double in [0, 1), 53 random bits.
    double next_unit() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Exponential draw with the given mean (inverse cdf).
    double next_exponential(double mean) noexcept {
        return -mean * std::log1p(-next_unit());
    }

    // Uniform index in [0, n). Multiply-shift map; bias is O(n / 2^64).
    std::size_t next_index(std::size_t n) noexcept {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Repositions the stream; the next draw uses counter c + 1.
    void set_counter(std::uint64_t c) noexcept { counter_ = c; }
    std::uint64_t counter() const noexcept { return counter_; }

    // Independent stream derived from this one's key.
    RandomStream substream(std::uint64_t tag) const noexcept {
        RandomStream s(0);
        s.key_ = derive_seed(key_, tag);
        s.counter_ = 0;
        return s;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace relaysched
