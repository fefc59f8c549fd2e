#include "augmix/augment.hpp"

#include <array>
#include <cmath>
#include <numeric>

namespace augmix {

namespace {

constexpr double kPi = 3.14159265358979323846;

float sample_bilinear_clamped(const Image& img, float fy, float fx, int c) {
    fy = std::min(std::max(fy, 0.0f), float(img.height - 1));
    fx = std::min(std::max(fx, 0.0f), float(img.width - 1));
    int y0 = static_cast<int>(fy);
    int x0 = static_cast<int>(fx);
    int y1 = std::min(y0 + 1, img.height - 1);
    int x1 = std::min(x0 + 1, img.width - 1);
    float wy = fy - y0, wx = fx - x0;
    float top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
    float bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
    return top * (1 - wy) + bot * wy;
}

// inv maps output (x, y) relative to center to source coords relative to
// center; shift is an absolute source offset applied after.
Image warp_inverse(const Image& img, const std::array<double, 4>& inv,
                   double shift_x = 0.0, double shift_y = 0.0) {
    Image out(img.height, img.width, img.channels);
    double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            double dx = x - cx, dy = y - cy;
            double sx = inv[0] * dx + inv[1] * dy + cx + shift_x;
            double sy = inv[2] * dx + inv[3] * dy + cy + shift_y;
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) =
                    clamp01(sample_bilinear_clamped(img, float(sy), float(sx), c));
        }
    return out;
}

std::array<double, 4> invert2x2(const std::array<double, 4>& m) {
    double det = m[0] * m[3] - m[1] * m[2];
    return {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
}

Image op_hflip(const Image& img) {
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    return out;
}

Image op_rotate(const Image& img) {
    // +15 degrees about the image center.
    double a = 15.0 * kPi / 180.0;
    std::array<double, 4> fwd = {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)};
    return warp_inverse(img, invert2x2(fwd));
}

Image op_affine_translate(const Image& img) {
    // Content shifts 10% right and 10% down.
    return warp_inverse(img, {1, 0, 0, 1}, -0.1 * img.width, -0.1 * img.height);
}

Image op_affine(const Image& img) {
    // rotate -10 deg, scale 0.9, shear 5 deg, composed about the center
    double a = -10.0 * kPi / 180.0;
    double sh = std::tan(5.0 * kPi / 180.0);
    double s = 0.9;
    std::array<double, 4> rot = {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)};
    std::array<double, 4> shear_scale = {s, s * sh, 0, s};
    std::array<double, 4> fwd = {
        rot[0] * shear_scale[0] + rot[1] * shear_scale[2],
        rot[0] * shear_scale[1] + rot[1] * shear_scale[3],
        rot[2] * shear_scale[0] + rot[3] * shear_scale[2],
        rot[2] * shear_scale[1] + rot[3] * shear_scale[3]};
    return warp_inverse(img, invert2x2(fwd));
}

Image op_center_crop(const Image& img) {
    // Central 80%, resized back to the original size.
    int ch = std::max(1, int(std::round(img.height * 0.8)));
    int cw = std::max(1, int(std::round(img.width * 0.8)));
    int y0 = (img.height - ch) / 2, x0 = (img.width - cw) / 2;
    Image crop(ch, cw, img.channels);
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x)
            for (int c = 0; c < img.channels; ++c)
                crop.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return resize_bilinear(crop, img.height, img.width);
}

Image op_perspective(const Image& img) {
    // Quad warp: top-left and bottom-right source corners pulled 10%
    // toward the center, the other two fixed.
    double W = img.width - 1, H = img.height - 1;
    double c00x = 0.1 * W, c00y = 0.1 * H;          // top-left
    double c10x = W, c10y = 0.0;                    // top-right
    double c01x = 0.0, c01y = H;                    // bottom-left
    double c11x = 0.9 * W, c11y = 0.9 * H;          // bottom-right
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y) {
        double v = H > 0 ? y / H : 0.0;
        for (int x = 0; x < img.width; ++x) {
            double u = W > 0 ? x / W : 0.0;
            double sx = (1 - u) * (1 - v) * c00x + u * (1 - v) * c10x +
                        (1 - u) * v * c01x + u * v * c11x;
            double sy = (1 - u) * (1 - v) * c00y + u * (1 - v) * c10y +
                        (1 - u) * v * c01y + u * v * c11y;
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) =
                    clamp01(sample_bilinear_clamped(img, float(sy), float(sx), c));
        }
    }
    return out;
}

Image op_equalize(const Image& img) {
    Image out = img;
    size_t n_px = static_cast<size_t>(img.height) * img.width;
    for (int c = 0; c < img.channels; ++c) {
        std::array<size_t, 256> hist{};
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                int q = std::min(255, int(img.at(y, x, c) * 255.0f));
                hist[q]++;
            }
        std::array<size_t, 256> cdf{};
        std::partial_sum(hist.begin(), hist.end(), cdf.begin());
        size_t cdf_min = 0;
        for (size_t v : cdf)
            if (v > 0) { cdf_min = v; break; }
        if (cdf_min == n_px) continue;  // constant channel, leave as is
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                int q = std::min(255, int(img.at(y, x, c) * 255.0f));
                out.at(y, x, c) =
                    clamp01(float(cdf[q] - cdf_min) / float(n_px - cdf_min));
            }
    }
    return out;
}

Image gaussian_blur3(const Image& img) {
    // 3x3 kernel, sigma = 1.0, edge-replicate.
    static const std::array<double, 3> k1 = [] {
        std::array<double, 3> k{std::exp(-0.5), 1.0, std::exp(-0.5)};
        double s = k[0] + k[1] + k[2];
        for (double& v : k) v /= s;
        return k;
    }();
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int sy = std::min(std::max(y + dy, 0), img.height - 1);
                        int sx = std::min(std::max(x + dx, 0), img.width - 1);
                        acc += k1[dy + 1] * k1[dx + 1] * img.at(sy, sx, c);
                    }
                out.at(y, x, c) = clamp01(float(acc));
            }
    return out;
}

Image op_grayscale(const Image& img) {
    Image gray = to_grayscale(img);
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = gray.at(y, x, 0);
    return out;
}

Image op_sharpen(const Image& img) {
    // Unsharp mask: img + 1.0 * (img - blur), clamped.
    Image blur = gaussian_blur3(img);
    Image out = img;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp01(2.0f * img.data[i] - blur.data[i]);
    return out;
}

Image op_posterize(const Image& img) {
    // Keep 4 bits per channel.
    Image out = img;
    for (float& v : out.data) {
        int q = std::min(255, int(std::lround(v * 255.0f)));
        v = float(q & 0xF0) / 255.0f;
    }
    return out;
}

}  // namespace

const std::vector<AugmentationOp>& augmentation_registry() {
    static const std::vector<AugmentationOp> registry = {
        {"HorizontalFlip", op_hflip},
        {"Rotation", op_rotate},
        {"AffineTranslate", op_affine_translate},
        {"Affine", op_affine},
        {"CenterCrop", op_center_crop},
        {"Perspective", op_perspective},
        {"Equalize", op_equalize},
        {"CenterCrop", op_center_crop},
        {"GaussianBlur", gaussian_blur3},
        {"Grayscale", op_grayscale},
        {"Sharpening", op_sharpen},
        {"Posterize", op_posterize},
    };
    return registry;
}

void AugIntensity::validate() const {
    if (n.empty() || n.size() != w.size())
        throw std::invalid_argument("AugIntensity: n and w must be non-empty and equal length");
    double sum = 0.0;
    for (size_t i = 0; i < n.size(); ++i) {
        if (n[i] < 0) throw std::invalid_argument("AugIntensity: counts must be >= 0");
        if (w[i] < 0.0) throw std::invalid_argument("AugIntensity: weights must be >= 0");
        sum += w[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("AugIntensity: weights must sum to 1");
}

double AugIntensity::expected_count() const {
    double e = 0.0;
    for (size_t i = 0; i < n.size(); ++i) e += n[i] * w[i];
    return e;
}

int derive_aug_key(PHash64 h) {
    return static_cast<int>(h.decimal() % 12);
}

int derive_aug_num(PHash64 h, const AugIntensity& intensity) {
    intensity.validate();
    double u = double(h.decimal() % 1000) / 1000.0;
    double cum = 0.0;
    for (size_t k = 0; k < intensity.n.size(); ++k) {
        cum += intensity.w[k];
        if (u < cum) return intensity.n[k];
    }
    return intensity.n.back();
}

std::vector<AugmentationOp> select_augmentations(int aug_key, int aug_num) {
    const auto& reg = augmentation_registry();
    if (aug_key < 0 || aug_key >= static_cast<int>(reg.size()))
        throw std::invalid_argument("select_augmentations: aug_key out of range");
    if (aug_num < 0 || aug_num > static_cast<int>(reg.size()))
        throw std::invalid_argument("select_augmentations: aug_num out of range");
    std::vector<AugmentationOp> selected;
    selected.reserve(aug_num);
    for (int i = 0; i < aug_num; ++i)
        selected.push_back(reg[(aug_key + i) % reg.size()]);
    return selected;
}

Image apply_augmentations(const Image& img, const std::vector<AugmentationOp>& ops) {
    Image out = img;
    for (const AugmentationOp& op : ops) out = op.apply(out);
    return out;
}

}  // namespace augmix
