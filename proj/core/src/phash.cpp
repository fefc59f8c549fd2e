#include "augmix/phash.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace augmix {

namespace {

// 32x32 orthonormal DCT-II basis, built once.
const std::vector<double>& dct_basis() {
    static const std::vector<double> basis = [] {
        const int n = kPhashInputSize;
        std::vector<double> b(static_cast<size_t>(n) * n);
        for (int k = 0; k < n; ++k) {
            double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (int i = 0; i < n; ++i)
                b[k * n + i] = scale * std::cos(M_PI * k * (2 * i + 1) / (2.0 * n));
        }
        return b;
    }();
    return basis;
}

}  // namespace

std::vector<double> dct2d(const std::vector<double>& m) {
    const int n = kPhashInputSize;
    if (m.size() != static_cast<size_t>(n) * n)
        throw std::invalid_argument("dct2d: input must be 32x32");

    const auto& b = dct_basis();
    // C = B * M * B^T, done as two passes.
    std::vector<double> tmp(m.size(), 0.0), out(m.size(), 0.0);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            double bk = b[k * n + i];
            for (int j = 0; j < n; ++j) tmp[k * n + j] += bk * m[i * n + j];
        }
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += tmp[k * n + j] * b[l * n + j];
            out[k * n + l] = acc;
        }
    return out;
}

PHash64 compute_phash(const Image& img) {
    Image gray = resize_bilinear(to_grayscale(img), kPhashInputSize, kPhashInputSize);

    std::vector<double> m(static_cast<size_t>(kPhashInputSize) * kPhashInputSize);
    for (size_t i = 0; i < m.size(); ++i) m[i] = gray.data[i];

    std::vector<double> coeffs = dct2d(m);

    // Top-left 8x8 block, DC included. Coefficients below numerical noise
    // are snapped to zero so flat regions hash the way exact arithmetic would.
    std::array<double, 64> block;
    for (int r = 0; r < kPhashBlockSize; ++r)
        for (int c = 0; c < kPhashBlockSize; ++c) {
            double v = coeffs[r * kPhashInputSize + c];
            block[r * kPhashBlockSize + c] = std::abs(v) < 1e-9 ? 0.0 : v;
        }

    // Median of an even count = lower of the two middle values.
    std::array<double, 64> sorted = block;
    std::nth_element(sorted.begin(), sorted.begin() + 31, sorted.end());
    double median = sorted[31];

    PHash64 h;
    for (int i = 0; i < 64; ++i)
        if (block[i] > median) h.bits |= uint64_t{1} << (63 - i);
    return h;
}

HashIndex build_hash_index(const std::vector<Image>& images, int owner) {
    HashIndex idx;
    idx.owner = owner;
    idx.entries.reserve(images.size());
    for (const Image& img : images) idx.entries.push_back(compute_phash(img).bits);
    std::sort(idx.entries.begin(), idx.entries.end());
    return idx;
}

bool lookup(const HashIndex& index, PHash64 h) {
    return std::binary_search(index.entries.begin(), index.entries.end(), h.bits);
}

DuplicateReport duplicate_stats(const HashIndex& train_index,
                                const std::vector<PHash64>& test_hashes) {
    DuplicateReport rep;
    const auto& e = train_index.entries;
    for (size_t i = 0; i < e.size();) {
        size_t j = i;
        while (j < e.size() && e[j] == e[i]) ++j;
        if (j - i > 1) rep.multiplicity_hist[j - i]++;
        i = j;
    }
    rep.test_total = test_hashes.size();
    for (PHash64 h : test_hashes)
        if (lookup(train_index, h)) rep.test_hits++;
    return rep;
}

std::string DuplicateReport::to_csv() const {
    std::ostringstream os;
    os << "multiplicity,count\n";
    for (auto [mult, count] : multiplicity_hist) os << mult << "," << count << "\n";
    os << "test_hits,test_total\n";
    os << test_hits << "," << test_total << "\n";
    return os.str();
}

}  // namespace augmix
