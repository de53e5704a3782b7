#pragma once

#include <cmath>
#include <cstdint>

namespace itherm {

/// Counter-based random streams. Every (seed, stream) pair yields an
/// independent deterministic sequence, so trajectory i can always draw from
/// stream i and results do not depend on how work is split across threads.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless mix of two 64-bit words, used to derive per-stream seeds.
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s = h ^ (b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    return splitmix64(s);
}

class Stream {
  public:
    Stream(std::uint64_t seed, std::uint64_t stream_index)
        : state_(mix(seed, stream_index)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform on (0,1), never returning an exact endpoint.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// One standard normal (Box-Muller; pairs are cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        cached_ = r * std::sin(th);
        have_cached_ = true;
        return r * std::cos(th);
    }

  private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace rng
}  // namespace itherm
