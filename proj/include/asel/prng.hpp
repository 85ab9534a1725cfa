#pragma once

#include <cmath>
#include <cstdint>

// Self-contained PRNG so streams are identical across platforms and
// standard library versions. Seed derivation hashes (master, ids...) so
// that parallel cells draw independent, schedule-invariant streams.

namespace asel {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master) { return splitmix64(master); }

template <class... Ids>
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id, Ids... rest) {
    return derive_seed(splitmix64(master ^ (id + 0x632be59bd9b4e019ULL)), rest...);
}

// xoshiro-style generator built on splitmix64 state advance.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // index draw from non-negative weights; caller guarantees positive total
    template <class Weights>
    std::size_t categorical(const Weights& w) {
        double total = 0.0;
        for (double x : w) total += x;
        double u = uniform() * total;
        std::size_t last = 0;
        std::size_t i = 0;
        for (double x : w) {
            if (x > 0.0) {
                if (u < x) return i;
                u -= x;
                last = i;
            }
            ++i;
        }
        return last;  // numeric tail
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace asel
