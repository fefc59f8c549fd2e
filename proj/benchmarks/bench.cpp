#include <benchmark/benchmark.h>

#include <random>

#include "augmix/augment.hpp"
#include "augmix/classifier.hpp"
#include "augmix/image.hpp"
#include "augmix/phash.hpp"

using namespace augmix;

namespace {

Image random_image(int h, int w, int c, uint64_t seed) {
    Image img(h, w, c);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (auto& v : img.data) v = u(rng);
    return img;
}

void BM_phash(benchmark::State& state) {
    Image img = random_image(28, 28, 1, 7);
    for (auto _ : state) benchmark::DoNotOptimize(compute_phash(img));
}
BENCHMARK(BM_phash);

void BM_dct32(benchmark::State& state) {
    std::vector<double> m(32 * 32);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : m) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(dct2d(m));
}
BENCHMARK(BM_dct32);

void BM_resize_bilinear(benchmark::State& state) {
    Image img = random_image(28, 28, 1, 3);
    for (auto _ : state) benchmark::DoNotOptimize(resize_bilinear(img, 32, 32));
}
BENCHMARK(BM_resize_bilinear);

void BM_apply_augmentations(benchmark::State& state) {
    Image img = random_image(28, 28, 1, 5);
    auto ops = select_augmentations(3, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(apply_augmentations(img, ops));
}
BENCHMARK(BM_apply_augmentations)->Arg(1)->Arg(3);

void BM_cnn_predict(benchmark::State& state) {
    ModelParams model = init_model("cnn_small", 10, 28, 28, 1, 42);
    Image img = random_image(28, 28, 1, 9);
    StandardizedImage s{img, {0.5f}, {0.25f}};
    for (auto _ : state) benchmark::DoNotOptimize(predict(model, s));
}
BENCHMARK(BM_cnn_predict);

}  // namespace

BENCHMARK_MAIN();
