#pragma once

#include <cmath>
#include <cstdint>

namespace gnc {

// Counter-based deterministic generator ("splitmix64" over a 128-bit
// (key, counter) state). Every draw hashes key ^ mix(counter++), so a
// stream is fully determined by its seed and the draw index; results are
// identical across platforms and independent of thread scheduling as long
// as draws happen in a fixed order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(splitmix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    // Derives an independent stream; `tag` distinguishes substreams of one seed.
    CounterRng fork(std::uint64_t tag) const {
        CounterRng r(0);
        r.key_ = splitmix(key_ ^ splitmix(tag + 0x632be59bd9b4e019ull));
        r.counter_ = 0;
        return r;
    }

    std::uint64_t next_u64() { return splitmix(key_ ^ (0xbf58476d1ce4e5b9ull * ++counter_)); }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    // Standard normal via Box-Muller; consumes exactly two draws per call.
    double normal() {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    std::uint64_t counter() const { return counter_; }

private:
    static std::uint64_t splitmix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace gnc
