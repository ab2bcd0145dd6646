#pragma once

#include <cstdint>

namespace poolest {

// PCG-XSH-RR 64/32.  Chosen over <random> engines because its output is
// fully specified, so seeded experiments are bit-identical across standard
// libraries and platforms, and independent streams make parallel trials
// reproducible regardless of scheduling.
class Pcg32 {
public:
    Pcg32(std::uint64_t seed, std::uint64_t stream) : inc_((stream << 1u) | 1u) {
        next();
        state_ += seed;
        next();
    }

    std::uint32_t next() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform in [0, 1) with the full 53 bits a double can hold.
    double next_double() {
        const std::uint64_t hi = next();
        const std::uint64_t lo = next();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_;
};

} // namespace poolest
