#include "augmix/image.hpp"

#include <cmath>

namespace augmix {

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3)
        throw std::invalid_argument("to_grayscale: expected 1 or 3 channels");
    Image out(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(y, x, 0) = 0.299f * img.at(y, x, 0) +
                              0.587f * img.at(y, x, 1) +
                              0.114f * img.at(y, x, 2);
    return out;
}

// Corner-aligned sampling: output corners map exactly onto input corners.
// A single-row/column output samples the input center instead.
Image resize_bilinear(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize_bilinear: target size must be >= 1");
    if (out_h == img.height && out_w == img.width) return img;

    Image out(out_h, out_w, img.channels);
    const float sy = out_h > 1 ? float(img.height - 1) / float(out_h - 1) : 0.0f;
    const float sx = out_w > 1 ? float(img.width - 1) / float(out_w - 1) : 0.0f;
    const float oy = out_h > 1 ? 0.0f : float(img.height - 1) / 2.0f;
    const float ox = out_w > 1 ? 0.0f : float(img.width - 1) / 2.0f;

    for (int y = 0; y < out_h; ++y) {
        float fy = oy + sy * y;
        int y0 = static_cast<int>(fy);
        int y1 = y0 + 1 < img.height ? y0 + 1 : y0;
        float wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            float fx = ox + sx * x;
            int x0 = static_cast<int>(fx);
            int x1 = x0 + 1 < img.width ? x0 + 1 : x0;
            float wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                float top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
                float bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

StandardizedImage standardize(const Image& img,
                              const std::vector<float>& means,
                              const std::vector<float>& stds) {
    if (static_cast<int>(means.size()) != img.channels ||
        static_cast<int>(stds.size()) != img.channels)
        throw std::invalid_argument("standardize: per-channel stats size mismatch");
    for (float s : stds)
        if (s <= 0.0f) throw std::invalid_argument("standardize: std must be > 0");

    StandardizedImage out;
    out.img = img;
    out.means = means;
    out.stds = stds;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.img.at(y, x, c) = (img.at(y, x, c) - means[c]) / stds[c];
    return out;
}

Image unstandardize(const StandardizedImage& s) {
    Image out = s.img;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < out.channels; ++c)
                out.at(y, x, c) = s.img.at(y, x, c) * s.stds[c] + s.means[c];
    return out;
}

}  // namespace augmix
