#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augmix/image.hpp"

namespace augmix {

/// Softmax output over n_cls classes. Kept in double so downstream
/// probability identities (clipping, entropies) hold to tight tolerances.
struct PredictionVector {
    std::vector<double> probs;
    int argmax() const;  // lowest index wins ties
};

struct TrainConfig {
    int epochs = 10;
    int batch_size = 32;
    float learning_rate = 0.01f;
    float momentum = 0.0f;      // classical SGD momentum
    float weight_decay = 0.0f;  // L2 coefficient
    uint64_t seed = 0;
};

/// Flat parameter vector plus the layout that maps slices to layers.
/// Two models with equal arch descriptors are elementwise combinable.
struct ModelParams {
    std::string arch_id;  // "cnn_small" | "mlp"
    int n_cls = 0;
    int in_h = 0, in_w = 0, in_c = 0;
    std::vector<float> theta;

    struct Slice {
        std::string name;
        size_t offset = 0, size = 0;
    };
    std::vector<Slice> layout;

    bool same_arch(const ModelParams& o) const {
        return arch_id == o.arch_id && n_cls == o.n_cls && in_h == o.in_h &&
               in_w == o.in_w && in_c == o.in_c;
    }
};

ModelParams init_model(const std::string& arch_id, int n_cls, int in_h, int in_w,
                       int in_c, uint64_t seed);

PredictionVector predict(const ModelParams& model, const StandardizedImage& img);

/// Cross-entropy loss of one sample plus the L2 term, evaluated in double
/// precision so finite-difference checks are not limited by float noise.
double sample_loss(const ModelParams& model, const StandardizedImage& img, int label,
                   float weight_decay = 0.0f);

/// Analytic gradient of sample_loss w.r.t. theta (double-precision pass).
std::vector<double> sample_gradient(const ModelParams& model, const StandardizedImage& img,
                                    int label, float weight_decay = 0.0f);

/// Mini-batch SGD on cross-entropy + (weight_decay/2)|theta|^2.
/// Deterministic for a fixed (seed, dataset order, cfg). `velocity` is an
/// optional in/out momentum buffer so optimizer state can persist across
/// calls (federated rounds); null or empty starts from rest.
ModelParams train_local(const ModelParams& model,
                        const std::vector<StandardizedImage>& inputs,
                        const std::vector<int>& labels, const TrainConfig& cfg,
                        std::vector<float>* velocity = nullptr);

ModelParams average_models(const std::vector<ModelParams>& models);

float accuracy(const ModelParams& model, const std::vector<StandardizedImage>& inputs,
               const std::vector<int>& labels);

/// Checkpoint: JSON header line + raw little-endian float32 theta.
void save_model(const ModelParams& model, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace augmix
