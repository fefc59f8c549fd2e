#pragma once

#include <optional>
#include <string>
#include <vector>

#include "augmix/dataset.hpp"
#include "augmix/defense.hpp"
#include "augmix/dfl.hpp"
#include "augmix/mia.hpp"
#include "augmix/tuner.hpp"

namespace augmix {

/// Flat key-value experiment configuration; every key has a CLI override
/// flag of the same name.
struct ExperimentConfig {
    std::string dataset_name = "dataset";
    std::string dataset_format = "idx";  // idx | image-dir
    std::string train_images, train_labels, test_images, test_labels;
    std::string train_dir, test_dir;
    int n_cls = 0;  // 0 = infer from data

    int n_participants = 4;
    std::string topology = "fully";
    int rounds = 5;
    std::string arch = "cnn_small";
    int epochs = 5;
    int batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.0;
    double weight_decay = 0.0;
    uint64_t seed = 1;

    std::string attacker = "entry";  // entry | center | leaf
    int eval_size = 500;
    int k_shadows = 3;
    int shadow_epochs = 0;  // 0 = auto (epochs * rounds, capped at 30)

    bool defense_enabled = true;
    bool tune = false;
    std::vector<int> aug_n = {0, 1};
    std::vector<double> aug_w = {0.7, 0.3};
    double alpha = 0.8;
    std::vector<double> alpha_grid;  // tuner; empty = SearchSpace defaults
    int refinement_steps = 2;
    bool pca_scalar_stats = false;

    int max_train = 0;  // 0 = use everything
    int max_test = 0;
    int metrics_sample = 200;  // per-round accuracy sample size
    bool reuse_checkpoints = false;

    std::string out_dir = "out";

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json() const;

    DefenseConfig defense() const;
    std::string topology_label() const;  // "star-center" / "star-leaf" for star
};

/// Everything produced by the pipeline up to (and including) federated
/// training and attack calibration; the immutable substrate every
/// evaluation reads from.
struct ExperimentEnv {
    ExperimentConfig cfg;
    LabeledDataset train_full, test_full;
    std::vector<float> means, stds;
    Topology topo;
    std::vector<Participant> participants;
    int entry_id = 0;
    PcaGallery gallery;
    HashIndex union_index;  // all participants' hashes merged

    AttackModel attack_model;
    ThresholdSet thresholds;
    std::vector<Image> eval_member_images;
    std::vector<int> eval_member_labels;
    std::vector<Image> eval_nonmember_images;
    std::vector<int> eval_nonmember_labels;

    DefenseContext context() const;
};

ExperimentEnv prepare_experiment(const ExperimentConfig& cfg);

/// Same answers as routing the eval sets through answer_query, but caches
/// the config-independent pieces (pHash, membership, bypass predictions,
/// augmented images); used by the tuner and the sweeps.
class DefenseEvaluator {
  public:
    explicit DefenseEvaluator(const ExperimentEnv& env);
    AttackReport evaluate(const DefenseConfig& cfg, bool defended);
    F1Vector evaluate_f1_vector(const DefenseConfig& cfg);

  private:
    struct CachedQuery {
        PHash64 hash;
        bool detected = false;
        int label = 0;
        bool is_member = false;
        std::vector<double> bypass_probs;
        const Image* image = nullptr;
    };
    const ExperimentEnv& env_;
    std::vector<CachedQuery> queries_;
    // (query idx, aug_num) -> augmented image
    std::vector<std::vector<std::optional<Image>>> aug_cache_;
    const Image& augmented(size_t qi, int aug_num);
};

struct ExperimentResult {
    AttackReport undefended;
    std::optional<AttackReport> defended;
    DefenseConfig used_defense;
    std::optional<TunerResult> tuner;
};

/// Full pipeline: ingest -> partition -> index/gallery -> federated
/// training -> attack calibration -> undefended suite -> (tune) ->
/// defended suite -> reports under cfg.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SweepRow {
    std::string param;
    double value = 0.0;
    AttackReport report;
};

std::vector<SweepRow> sweep_alpha(const ExperimentEnv& env, const DefenseConfig& base,
                                  const std::vector<double>& alphas);
std::vector<SweepRow> sweep_intensity(const ExperimentEnv& env, const DefenseConfig& base,
                                      const std::vector<AugIntensity>& intensities);
/// Clip baseline: caps the undefended prediction vectors at each max_conf.
std::vector<SweepRow> sweep_max_conf(const ExperimentEnv& env,
                                     const std::vector<double>& values);
/// L2 baseline: retrains the whole network per weight_decay value.
std::vector<SweepRow> sweep_weight_decay(const ExperimentConfig& cfg,
                                         const std::vector<double>& values);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_tuner_csv(const TunerResult& result, const std::string& path);

}  // namespace augmix
