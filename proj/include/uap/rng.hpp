#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace uap {

// Deterministic RNG. mt19937_64 output is fixed by the standard; the
// distribution transforms below are implemented here (std:: distributions are
// implementation-defined) so identical seeds give identical streams on any
// conforming build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    float uniform(float lo, float hi) {
        return lo + (hi - lo) * static_cast<float>(uniform());
    }

    // [0, n)
    int uniform_int(int n) {
        return static_cast<int>(static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * static_cast<std::uint64_t>(n)) >> 64));
    }

    // Box-Muller; the spare value is cached.
    float normal(float mean = 0.0f, float sd = 1.0f) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586 * u2;
        spare_ = static_cast<float>(r * std::sin(a));
        have_spare_ = true;
        return mean + sd * static_cast<float>(r * std::cos(a));
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<std::size_t>(i)],
                      v[static_cast<std::size_t>(uniform_int(i + 1))]);
        }
    }

    // Derives an independent stream seed (splitmix64 finalizer over a mixed key).
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

private:
    std::mt19937_64 engine_;
    float spare_ = 0.0f;
    bool have_spare_ = false;
};

}  // namespace uap
