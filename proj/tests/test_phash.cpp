#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "augmix/phash.hpp"
#include "support.hpp"

using namespace augmix;

namespace {

// Naive O(N^4) orthonormal DCT-II: the independent oracle the fast
// transform is checked against.
std::vector<double> dct2d_oracle(const std::vector<double>& m, int n) {
    std::vector<double> out(size_t(n) * n, 0.0);
    const double pi = std::numbers::pi;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            double sum = 0.0;
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    sum += m[size_t(y) * n + x] *
                           std::cos(pi * (2 * y + 1) * u / (2.0 * n)) *
                           std::cos(pi * (2 * x + 1) * v / (2.0 * n));
            double au = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            double av = v == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            out[size_t(u) * n + v] = au * av * sum;
        }
    return out;
}

// The whole hash recipe recomputed from scratch on top of the oracle DCT.
PHash64 phash_oracle(const Image& img) {
    Image g = to_grayscale(img);
    Image r = resize_bilinear(g, 32, 32);
    std::vector<double> m(32 * 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) m[size_t(y) * 32 + x] = r.at(y, x, 0);
    std::vector<double> d = dct2d_oracle(m, 32);
    std::vector<double> block;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) block.push_back(d[size_t(y) * 32 + x]);
    std::vector<double> sorted = block;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[31];  // lower of the two middle values
    PHash64 h;
    for (int i = 0; i < 64; ++i)
        if (block[i] > median) h.bits |= (uint64_t(1) << (63 - i));
    return h;
}

}  // namespace

TEST_CASE("dct2d: constant matrix has only the DC coefficient, value 32*v") {
    std::vector<double> m(32 * 32, 0.25);
    std::vector<double> d = dct2d(m);
    CHECK(d[0] == doctest::Approx(32.0 * 0.25).epsilon(1e-9));
    double off = 0.0;
    for (size_t i = 1; i < d.size(); ++i) off = std::max(off, std::abs(d[i]));
    CHECK(off < 1e-9);
}

TEST_CASE("dct2d matches the O(N^4) oracle on random matrices") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> m(32 * 32);
        for (auto& v : m) v = u(rng);
        std::vector<double> fast = dct2d(m);
        std::vector<double> slow = dct2d_oracle(m, 32);
        for (size_t i = 0; i < m.size(); ++i)
            CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-9));
    }
}

TEST_CASE("compute_phash matches the brute-force pipeline bit-exactly") {
    for (int k = 0; k < 25; ++k) {
        Image img = testsup::random_image(28, 28, k % 2 ? 1 : 3, 100 + k);
        CHECK(compute_phash(img).bits == phash_oracle(img).bits);
    }
}

TEST_CASE("constant image hashes to exactly the DC bit") {
    Image img(28, 28, 1, 0.5f);
    PHash64 h = compute_phash(img);
    CHECK(h.bits == (uint64_t(1) << 63));
}

TEST_CASE("one-pixel 1/255 flip moves the hash by at most 4 bits") {
    int worst = 0;
    for (int k = 0; k < 100; ++k) {
        Image img = testsup::random_image(28, 28, 1, 500 + k);
        for (auto& v : img.data) v = std::round(v * 255.0f) / 255.0f;
        Image flipped = img;
        size_t px = k % flipped.data.size();
        flipped.data[px] = clamp01(flipped.data[px] + (flipped.data[px] > 0.5f ? -1.0f : 1.0f) / 255.0f);
        int dist = std::popcount(compute_phash(img).bits ^ compute_phash(flipped).bits);
        worst = std::max(worst, dist);
    }
    CHECK(worst <= 4);
}

TEST_CASE("hash index lookup with duplicates retained") {
    std::vector<Image> imgs;
    for (int k = 0; k < 5; ++k) imgs.push_back(testsup::random_image(16, 16, 1, 40 + k));
    imgs.push_back(imgs[0]);  // duplicate
    HashIndex idx = build_hash_index(imgs, 2);
    CHECK(idx.owner == 2);
    CHECK(idx.entries.size() == 6);
    CHECK(std::is_sorted(idx.entries.begin(), idx.entries.end()));
    for (const Image& img : imgs) CHECK(lookup(idx, compute_phash(img)));
    CHECK_FALSE(lookup(idx, PHash64{compute_phash(imgs[0]).bits ^ 1}));
}

TEST_CASE("duplicate report: histogram and test-hit accounting") {
    std::vector<Image> train;
    for (int k = 0; k < 4; ++k) train.push_back(testsup::random_image(16, 16, 1, 70 + k));
    train.push_back(train[0]);
    train.push_back(train[0]);  // multiplicity 3
    train.push_back(train[1]);  // multiplicity 2
    HashIndex idx = build_hash_index(train, 0);

    std::vector<PHash64> test_hashes = {compute_phash(train[0]),
                                        compute_phash(testsup::random_image(16, 16, 1, 999))};
    DuplicateReport rep = duplicate_stats(idx, test_hashes);
    CHECK(rep.multiplicity_hist[3] == 1);
    CHECK(rep.multiplicity_hist[2] == 1);
    CHECK(rep.test_hits == 1);
    CHECK(rep.test_total == 2);

    std::string csv = rep.to_csv();
    CHECK(csv.find("multiplicity,count") != std::string::npos);
    CHECK(csv.find("test_hits,test_total") != std::string::npos);
}

TEST_CASE("hash is deterministic across calls") {
    Image img = testsup::random_image(30, 26, 3, 8);
    CHECK(compute_phash(img).bits == compute_phash(img).bits);
}
