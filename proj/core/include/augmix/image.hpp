#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace augmix {

/// Dense H x W x C image, row-major, float values in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("Image: bad shape");
    }

    float& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

/// Image whose values have been mean-subtracted and std-divided per channel.
/// Keeps the statistics so the transform is invertible.
struct StandardizedImage {
    Image img;  // standardized values, same layout as the source
    std::vector<float> means;
    std::vector<float> stds;
};

Image to_grayscale(const Image& img);
Image resize_bilinear(const Image& img, int out_h, int out_w);

StandardizedImage standardize(const Image& img,
                              const std::vector<float>& means,
                              const std::vector<float>& stds);
Image unstandardize(const StandardizedImage& s);

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

}  // namespace augmix
