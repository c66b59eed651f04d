#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "market/bytes.hpp"

namespace market {

/// Deterministic RNG passed explicitly wherever randomness is needed.
/// Never shared between components; fork() derives an independent child
/// stream so sibling components cannot perturb each other's draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [lo, hi] inclusive.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(eng_);
    }

    double uniform_real(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }

    Bytes bytes(std::size_t n) {
        Bytes out(n);
        for (auto& b : out) b = static_cast<std::uint8_t>(eng_() & 0xff);
        return out;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), eng_);
    }

    /// Child stream keyed by a label, independent of later draws on *this.
    Rng fork(std::string_view label) {
        Bytes material;
        std::uint64_t x = eng_();
        for (int i = 0; i < 8; ++i) material.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
        material.insert(material.end(), label.begin(), label.end());
        Digest d = hash32(material);
        std::uint64_t seed = 0;
        for (int i = 0; i < 8; ++i) seed |= static_cast<std::uint64_t>(d[i]) << (8 * i);
        return Rng(seed);
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace market
