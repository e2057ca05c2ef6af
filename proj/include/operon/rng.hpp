#pragma once

#include <cmath>
#include <cstdint>

namespace operon {

// Splittable counter-seeded generator: xoshiro256** state filled by splitmix64.
// Every public entry point in this library takes an explicit seed or Rng so
// runs are reproducible bit-for-bit; substreams are derived from (seed, index)
// pairs and are independent of thread scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
        have_cached_normal_ = false;
        cached_normal_ = 0.0;
    }

    // Derived stream for (seed, index); deterministic and decorrelated from the parent.
    Rng substream(std::uint64_t index) const {
        std::uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ULL + index);
        std::uint64_t mixed = splitmix64(x);
        mixed ^= splitmix64(x);
        return Rng(mixed);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_open() { return 1.0 - uniform(); }

    // Standard normal via Box-Muller; the pair partner is cached.
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_normal_ = r * std::sin(theta);
        have_cached_normal_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates shuffle of an index array.
    template <typename T>
    void shuffle(T* data, std::size_t n) {
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_u64() % i);
            T tmp = data[i - 1];
            data[i - 1] = data[j];
            data[j] = tmp;
        }
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t seed_;
    std::uint64_t state_[4];
    bool have_cached_normal_;
    double cached_normal_;
};

} // namespace operon
