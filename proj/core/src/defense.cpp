#include "augmix/defense.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace augmix {

std::string GatewayDecision::to_json() const {
    nlohmann::json j{{"is_member_detected", is_member_detected},
                     {"aug_key", aug_key},
                     {"aug_num", aug_num},
                     {"pca_key", pca_key},
                     {"applied_ops", applied_ops}};
    return j.dump();
}

std::pair<PredictionVector, GatewayDecision> answer_query(const DefenseContext& ctx,
                                                          const Image& img,
                                                          const DefenseConfig& cfg) {
    if (!ctx.topology || !ctx.participants || !ctx.gallery)
        throw std::invalid_argument("answer_query: incomplete defense context");
    const Participant& entry = (*ctx.participants)[ctx.entry_id];

    GatewayDecision decision;
    PHash64 h = compute_phash(img);
    bool member = cfg.enabled &&
                  membership_query(*ctx.topology, *ctx.participants, ctx.entry_id, h);
    decision.is_member_detected = member;

    if (!member) {
        StandardizedImage s = standardize(img, ctx.means, ctx.stds);
        return {predict(entry.model, s), decision};
    }

    cfg.validate();
    decision.aug_key = derive_aug_key(h);
    decision.aug_num = derive_aug_num(h, cfg.intensity);
    std::vector<AugmentationOp> ops =
        select_augmentations(decision.aug_key, decision.aug_num);
    for (const AugmentationOp& op : ops) decision.applied_ops.push_back(op.name);
    Image augmented = apply_augmentations(img, ops);

    decision.pca_key = derive_pca_key(h, ctx.gallery->n_cls);
    Image fused = fuse(augmented, ctx.gallery->images[decision.pca_key], cfg.alpha);

    StandardizedImage s = standardize(fused, ctx.means, ctx.stds);
    return {predict(entry.model, s), decision};
}

PredictionVector clip_confidence(const PredictionVector& p, double max_conf) {
    int n = static_cast<int>(p.probs.size());
    if (n == 0) throw std::invalid_argument("clip_confidence: empty vector");
    if (max_conf < 1.0 / n || max_conf >= 1.0)
        throw std::invalid_argument("clip_confidence: max_conf must be in [1/n_cls, 1)");

    int arg = 0;  // lowest index wins ties
    for (int i = 1; i < n; ++i)
        if (p.probs[i] > p.probs[arg]) arg = i;
    double mx = p.probs[arg];
    if (mx <= max_conf) return p;

    PredictionVector out = p;
    double scale = (1.0 - max_conf) / (1.0 - mx);
    for (int i = 0; i < n; ++i) out.probs[i] = p.probs[i] * scale;
    out.probs[arg] = max_conf;
    return out;
}

}  // namespace augmix
