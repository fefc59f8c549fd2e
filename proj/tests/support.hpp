#pragma once

// Shared helpers for the test binaries: random images and a synthetic
// Fashion-MNIST-scale dataset (per-class templates plus sample noise) that
// the training/attack/defense tests run on.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "augmix/dataset.hpp"
#include "augmix/image.hpp"

namespace testsup {

inline augmix::Image random_image(int h, int w, int c, uint64_t seed) {
    augmix::Image img(h, w, c);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : img.data) v = u(rng);
    return img;
}

/// Smooth per-class templates: a few random gaussian blobs per class.
/// Samples are clamp(template + noise * N(0,1)). Large noise makes the
/// class signal weak, so a long-trained network memorizes members and the
/// train/test accuracy gap opens up.
inline std::vector<augmix::Image> class_templates(int n_cls, int h, int w,
                                                  uint64_t seed) {
    std::vector<augmix::Image> tpl;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> pos(0.15f, 0.85f);
    std::uniform_real_distribution<float> amp(0.5f, 1.0f);
    std::uniform_real_distribution<float> rad(0.08f, 0.22f);
    for (int c = 0; c < n_cls; ++c) {
        augmix::Image img(h, w, 1, 0.1f);
        for (int b = 0; b < 4; ++b) {
            float cy = pos(rng) * h, cx = pos(rng) * w;
            float a = amp(rng), r = rad(rng) * h;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    float d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    img.at(y, x, 0) += a * std::exp(-d2 / (2.0f * r * r));
                }
        }
        for (auto& v : img.data) v = augmix::clamp01(v);
        tpl.push_back(std::move(img));
    }
    return tpl;
}

/// `flip` is the label-noise rate: that fraction of samples (in any split)
/// carries a uniformly random wrong label. Smooth templates alone are too
/// learnable for a train/test gap; label noise puts a ceiling on test
/// accuracy while a long-trained network still memorizes its train split.
inline augmix::LabeledDataset make_synthetic(int n_per_class, int n_cls, int h, int w,
                                             uint64_t seed, float noise,
                                             const std::string& split,
                                             float flip = 0.0f) {
    auto tpl = class_templates(n_cls, h, w, seed);
    augmix::LabeledDataset ds;
    ds.n_cls = n_cls;
    ds.split = split;
    std::mt19937_64 rng(seed ^ std::hash<std::string>{}(split));
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int c = 0; c < n_cls; ++c)
        for (int k = 0; k < n_per_class; ++k) {
            augmix::Image img = tpl[c];
            for (auto& v : img.data) v = augmix::clamp01(v + noise * g(rng));
            // quantize to 8 bits like a real ubyte dataset would be
            for (auto& v : img.data)
                v = std::round(v * 255.0f) / 255.0f;
            ds.images.push_back(std::move(img));
            int label = c;
            if (flip > 0.0f && u(rng) < flip)
                label = (c + 1 + int(rng() % (n_cls - 1))) % n_cls;
            ds.labels.push_back(label);
        }
    return ds;
}

/// Writes train/test IDX pairs under dir and returns the four paths
/// (train_images, train_labels, test_images, test_labels).
inline std::vector<std::string> write_synthetic_idx(const std::string& dir,
                                                    int train_per_class,
                                                    int test_per_class, int n_cls,
                                                    uint64_t seed, float noise,
                                                    float flip = 0.0f) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    augmix::LabeledDataset train =
        make_synthetic(train_per_class, n_cls, 28, 28, seed, noise, "train", flip);
    augmix::LabeledDataset test =
        make_synthetic(test_per_class, n_cls, 28, 28, seed, noise, "test", flip);
    std::vector<std::string> paths = {
        (fs::path(dir) / "train-images.idx").string(),
        (fs::path(dir) / "train-labels.idx").string(),
        (fs::path(dir) / "test-images.idx").string(),
        (fs::path(dir) / "test-labels.idx").string(),
    };
    augmix::write_idx(train, paths[0], paths[1]);
    augmix::write_idx(test, paths[2], paths[3]);
    return paths;
}

inline std::string temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("augmix_test_" + tag);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace testsup
