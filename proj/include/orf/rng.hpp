#pragma once

#include <cstdint>
#include <random>

namespace orf {

// splitmix64 mixer; used to derive independent sub-stream seeds so that
// per-tree / per-replication RNGs do not depend on thread scheduling.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x51ULL));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t s1, std::uint64_t s2) {
    return derive_seed(derive_seed(base, s1), s2);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

// First k elements of a uniformly random permutation of 0..n-1
// (partial Fisher-Yates, O(n) memory, O(n + k) time).
inline std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> d(i, n - 1);
        std::swap(pool[i], pool[d(rng)]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace orf
