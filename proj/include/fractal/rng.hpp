#pragma once

#include <array>
#include <cstdint>

namespace fractal {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
// Stateless: output is a pure function of (key, counter), so draws keyed by
// (seed, level, parent, draw) are reproducible independent of thread
// scheduling and evaluation order.
struct Philox4x32 {
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                              std::uint32_t c0, std::uint32_t c1,
                                              std::uint32_t c2, std::uint32_t c3) {
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        std::array<std::uint32_t, 4> x{c0, c1, c2, c3};
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t pa = static_cast<std::uint64_t>(kMulA) * x[0];
            const std::uint64_t pb = static_cast<std::uint64_t>(kMulB) * x[2];
            const std::uint32_t hi_a = static_cast<std::uint32_t>(pa >> 32);
            const std::uint32_t lo_a = static_cast<std::uint32_t>(pa);
            const std::uint32_t hi_b = static_cast<std::uint32_t>(pb >> 32);
            const std::uint32_t lo_b = static_cast<std::uint32_t>(pb);
            x = {hi_b ^ x[1] ^ k0, lo_b, hi_a ^ x[3] ^ k1, lo_a};
            k0 += kWeylA;
            k1 += kWeylB;
        }
        return x;
    }
};

// Domain tags keep independent random streams from colliding on the same
// counter values.
enum class RngStream : std::uint32_t {
    ChildDraw = 1,  // subdivision choices in the nested construction
    CoveringPoint = 2,  // uniform torus translations
    Aux = 3,  // experiment-level sampling (lines, strips, radii)
};

inline std::uint32_t stream_word(RngStream s, std::uint32_t level) {
    return (static_cast<std::uint32_t>(s) << 24) | (level & 0x00FFFFFFu);
}

// Uniform integer in [0, bound), unbiased via rejection over the four output
// words of one block; extra blocks are keyed by an attempt counter.
inline std::uint64_t uniform_below(std::uint64_t key, std::uint32_t word0, std::uint64_t index,
                                   std::uint32_t draw, std::uint64_t bound) {
    const std::uint64_t limit = (0xFFFFFFFFFFFFFFFFull / bound) * bound;
    for (std::uint32_t attempt = 0;; ++attempt) {
        const std::uint32_t c2 = static_cast<std::uint32_t>(index >> 32) ^ (attempt << 8);
        auto x = Philox4x32::block(key, word0, static_cast<std::uint32_t>(index), c2, draw);
        const std::uint64_t lo = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
        const std::uint64_t hi = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
        if (lo < limit) return lo % bound;
        if (hi < limit) return hi % bound;
    }
}

// Uniform double in [0,1) with 53 random bits.
inline double uniform_unit(std::uint64_t key, std::uint32_t word0, std::uint64_t index,
                           std::uint32_t draw) {
    auto x = Philox4x32::block(key, word0, static_cast<std::uint32_t>(index),
                               static_cast<std::uint32_t>(index >> 32), draw);
    const std::uint64_t v = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent subkey for (seed, index), e.g. per-trial or per-worker keys.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x708149B7D4618F4Cull));
}

// Small stateful convenience wrapper over the counter generator for
// experiment-level sampling (sequence position acts as the counter).
class SeqRng {
public:
    SeqRng(std::uint64_t key, std::uint32_t stream_level = 0)
        : key_(key), word0_(stream_word(RngStream::Aux, stream_level)), next_(0) {}

    double unit() { return uniform_unit(key_, word0_, next_++, 0); }
    std::uint64_t below(std::uint64_t bound) { return uniform_below(key_, word0_, next_++, 0, bound); }
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::uint64_t key_;
    std::uint32_t word0_;
    std::uint64_t next_;
};

} // namespace fractal
