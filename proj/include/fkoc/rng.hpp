#pragma once

#include <cstdint>
#include <random>

namespace fkoc {

// Seeded generator with explicit uniform mapping, so identical seeds give
// identical streams independent of standard-library distribution details.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double u01() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 gen_;
};

} // namespace fkoc
