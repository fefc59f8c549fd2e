#pragma once

#include <string>
#include <vector>

#include "augmix/image.hpp"
#include "augmix/phash.hpp"

namespace augmix {

/// Rows are flattened images of one class (row-major vec of H x W x C).
struct ClassMatrix {
    std::vector<double> rows;  // n x d, row-major
    size_t n = 0, d = 0;
    int class_id = -1;
    int height = 0, width = 0, channels = 0;
};

/// One PCA-reconstructed image per class.
struct PcaGallery {
    std::vector<Image> images;  // indexed by class id
    int n_cls = 0;
};

struct FusionWeight {
    double alpha = 1.0;
    void validate() const {
        if (alpha < 0.0 || alpha > 1.0)
            throw std::invalid_argument("FusionWeight: alpha must be in [0,1]");
    }
};

ClassMatrix build_class_matrix(const std::vector<Image>& images, int class_id);

/// Unit-norm direction of maximum variance of the column-centered matrix.
/// Power iteration, fixed all-ones start vector; sign fixed so the
/// largest-magnitude entry is positive.
std::vector<double> first_principal_component(const ClassMatrix& X);

/// m = v1 * sigma + mu elementwise (per-column stats by default; population
/// std convention), clamped to [0,1] and reshaped. scalar_stats switches to
/// whole-matrix scalar mean/std.
Image reconstruct_class_image(const ClassMatrix& X, bool scalar_stats = false);

PcaGallery build_gallery(const std::vector<Image>& images,
                         const std::vector<int>& labels, int n_cls,
                         bool scalar_stats = false);

int derive_pca_key(PHash64 h, int n_cls);
Image fuse(const Image& aug, const Image& pca, FusionWeight w);

/// Gallery persists as one PPM/PGM per class plus a JSON manifest.
void save_gallery(const PcaGallery& g, const std::string& dir);
PcaGallery load_gallery(const std::string& dir);

}  // namespace augmix
