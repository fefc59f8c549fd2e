#pragma once

#include <string>
#include <vector>

#include "augmix/augment.hpp"
#include "augmix/dfl.hpp"
#include "augmix/pca.hpp"

namespace augmix {

struct DefenseConfig {
    AugIntensity intensity;
    FusionWeight alpha;
    bool enabled = true;

    void validate() const {
        intensity.validate();
        alpha.validate();
    }
};

struct GatewayDecision {
    bool is_member_detected = false;
    int aug_key = -1;
    int aug_num = -1;
    int pca_key = -1;
    std::vector<std::string> applied_ops;
    std::string to_json() const;
};

/// Everything the answer path needs besides the query itself: the trained
/// network state at the attacker's entry participant plus the dataset's
/// standardization statistics.
struct DefenseContext {
    const Topology* topology = nullptr;
    const std::vector<Participant>* participants = nullptr;
    int entry_id = 0;
    const PcaGallery* gallery = nullptr;
    std::vector<float> means, stds;
};

/// AugMixCloak answer path: pHash, flooding membership check, then either
/// the untouched bypass or augment + PCA-fuse before prediction.
std::pair<PredictionVector, GatewayDecision> answer_query(const DefenseContext& ctx,
                                                          const Image& img,
                                                          const DefenseConfig& cfg);

/// Confidence-clipping baseline: caps max(p) at max_conf and redistributes
/// the remainder proportionally.
PredictionVector clip_confidence(const PredictionVector& p, double max_conf);

}  // namespace augmix
