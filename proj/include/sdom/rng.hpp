#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace sdom {

// xoshiro256** seeded through splitmix64. A fixed algorithm keeps every
// stream reproducible bit for bit, which std::normal_distribution does not
// guarantee. Child streams derive from the original seed and a stream tag
// only, so fan-out does not depend on how many values were already drawn.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                         // [0, 1)
    double uniform(double lo, double hi);
    std::size_t uniform_index(std::size_t n); // [0, n), n >= 1
    double normal();                          // standard normal (Marsaglia polar)
    double normal(double mean, double stddev);

    Rng child(std::uint64_t stream) const;
    std::uint64_t seed() const noexcept { return seed_; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::uint64_t seed_ = 0;
    std::array<std::uint64_t, 4> state_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sdom
