#pragma once

#include <functional>
#include <string>
#include <vector>

#include "augmix/image.hpp"
#include "augmix/phash.hpp"

namespace augmix {

/// One deterministic augmentation operator. All parameters are fixed
/// constants (see augment.cpp); same input always gives the same output.
struct AugmentationOp {
    std::string name;
    std::function<Image(const Image&)> apply;
};

/// The operator registry. Exactly 12 entries, order is a stability
/// contract (CenterCrop appears at both index 4 and index 7).
const std::vector<AugmentationOp>& augmentation_registry();

/// Candidate augmentation counts n with matching probability weights w.
struct AugIntensity {
    std::vector<int> n;
    std::vector<double> w;

    void validate() const;
    /// Expected augmentation count under w; used for tuner tie-breaking.
    double expected_count() const;
};

int derive_aug_key(PHash64 h);
int derive_aug_num(PHash64 h, const AugIntensity& intensity);
std::vector<AugmentationOp> select_augmentations(int aug_key, int aug_num);
Image apply_augmentations(const Image& img, const std::vector<AugmentationOp>& ops);

}  // namespace augmix
