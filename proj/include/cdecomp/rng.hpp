#ifndef CDECOMP_RNG_HPP
#define CDECOMP_RNG_HPP

#include <cstdint>
#include <random>

namespace cdecomp {

// SplitMix64 mixing step. Used to derive independent substream seeds from a
// master seed plus a stream index, so that per-replicate / per-batch RNG does
// not depend on thread count or schedule.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(master, a), b);
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream) {
    return std::mt19937_64(derive_seed(master, stream));
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return std::mt19937_64(derive_seed(master, a, b));
}

} // namespace cdecomp

#endif
