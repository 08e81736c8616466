// Deterministic random number generation. The uniform and normal variates
// are derived from the mt19937_64 bit stream directly, so sequences are
// identical across platforms and standard-library implementations.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fpld {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform_open01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform_open01(); }

    // Box-Muller; both variates of a pair are used.
    double normal(double mean, double sd) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        const double u1 = uniform_open01();
        const double u2 = uniform_open01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return mean + sd * radius * std::cos(angle);
    }

    // Independent stream seed for a work unit (replicate, fold, ...), so
    // results do not depend on scheduling.
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
        std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fpld
