#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "augmix/image.hpp"

namespace augmix {

/// 64-bit DCT perceptual hash. The decimal view is the same 64 bits read as
/// an unsigned integer; it seeds every deterministic defense choice.
struct PHash64 {
    uint64_t bits = 0;
    uint64_t decimal() const { return bits; }
    friend bool operator==(PHash64 a, PHash64 b) { return a.bits == b.bits; }
    friend auto operator<=>(PHash64 a, PHash64 b) { return a.bits <=> b.bits; }
};

/// Sorted multiset of hashes for one participant's local images.
struct HashIndex {
    std::vector<uint64_t> entries;  // ascending, duplicates retained
    int owner = -1;
};

struct DuplicateReport {
    std::map<size_t, size_t> multiplicity_hist;  // multiplicity (>1) -> value count
    size_t test_hits = 0;
    size_t test_total = 0;
    std::string to_csv() const;
};

/// Orthonormal type-II 2-D DCT of a 32x32 matrix (row-major).
std::vector<double> dct2d(const std::vector<double>& m);

inline constexpr int kPhashInputSize = 32;
inline constexpr int kPhashBlockSize = 8;

PHash64 compute_phash(const Image& img);
HashIndex build_hash_index(const std::vector<Image>& images, int owner);
bool lookup(const HashIndex& index, PHash64 h);
DuplicateReport duplicate_stats(const HashIndex& train_index,
                                const std::vector<PHash64>& test_hashes);

}  // namespace augmix
