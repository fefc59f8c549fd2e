#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augmix/image.hpp"

namespace augmix {

struct LabeledDataset {
    std::vector<Image> images;
    std::vector<int> labels;
    int n_cls = 0;
    std::string split;  // "train" | "test"

    size_t size() const { return images.size(); }
};

/// IDX ubyte pair (big-endian 4-byte magic format) -> [0,1] pixels.
/// expected_n_cls > 0 pins the class count; labels at or above it are an
/// ingestion error. 0 infers the count from the data.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        int expected_n_cls = 0);
void write_idx(const LabeledDataset& ds, const std::string& images_path,
               const std::string& labels_path);

/// One subdirectory per class holding PNG/PPM/PGM files; lexicographic
/// ordering of class names and file names keeps ingestion deterministic.
LabeledDataset load_image_dir(const std::string& dir);

LabeledDataset load_dataset(const std::string& path_or_images,
                            const std::string& format,
                            const std::string& labels_path = "",
                            int expected_n_cls = 0);

/// Per class: seeded shuffle, round-robin deal. Partition sizes per class
/// differ by at most one.
std::vector<LabeledDataset> partition_iid(const LabeledDataset& ds, int n,
                                          uint64_t seed);

/// Per-channel mean/std over a dataset, for the standardization step.
void channel_stats(const LabeledDataset& ds, std::vector<float>* means,
                   std::vector<float>* stds);

/// Stage seeds derive from the master seed via FNV-1a over the stage name,
/// so no stage reads ambient randomness.
uint64_t derive_seed(uint64_t master_seed, const std::string& stage);

}  // namespace augmix
