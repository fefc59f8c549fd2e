#pragma once

#include <string>
#include <vector>

#include "augmix/classifier.hpp"
#include "augmix/defense.hpp"

namespace augmix {

struct AttackSample {
    std::vector<double> probs;
    int true_label = 0;
    bool is_member = false;
};

/// One row of the results tables: four attack F1 scores plus the accuracy
/// pair (Acc1 on members, Acc2 on non-members).
struct AttackReport {
    double f1_binary = 0.0;
    double f1_correctness = 0.0;  // M1
    double f1_entropy = 0.0;      // M2
    double f1_mentropy = 0.0;     // M3
    double acc_train = 0.0;       // Acc1
    double acc_test = 0.0;        // Acc2

    double mean_deviation() const;  // mean |F1 - 0.5| over the four attacks
    double max_deviation() const;
    static std::string csv_header();
    std::string to_csv_row(const std::string& dataset, const std::string& topology,
                           const std::string& defense) const;
};

/// Per-class decision thresholds; member predicted iff metric < threshold.
struct ThresholdSet {
    std::vector<double> entropy_thr;
    std::vector<double> mentropy_thr;
};

double entropy(const std::vector<double>& probs);
double modified_entropy(const std::vector<double>& probs, int true_label);
bool correctness_attack(const AttackSample& s);

ThresholdSet calibrate_thresholds(const std::vector<AttackSample>& shadow_samples,
                                  int n_cls);

/// Logistic regression over (probs sorted descending, cross-entropy loss,
/// one-hot true label), trained on shadow member/non-member outputs.
struct AttackModel {
    int n_cls = 0;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feat_mean, feat_std;

    std::vector<double> features(const AttackSample& s) const;
    double score(const AttackSample& s) const;  // P(member)
    bool predict_member(const AttackSample& s) const { return score(s) >= 0.5; }
};

struct ShadowAttackResult {
    AttackModel model;
    std::vector<AttackSample> shadow_samples;  // also feed threshold calibration
};

ShadowAttackResult train_shadow_attack(const std::vector<StandardizedImage>& aux_inputs,
                                       const std::vector<int>& aux_labels,
                                       const std::string& arch_id, int n_cls,
                                       int k_shadows, const TrainConfig& cfg);

/// F1 with member as the positive class; 0 when precision+recall is 0.
double evaluate_f1(const std::vector<bool>& predictions, const std::vector<bool>& truth);

/// Scores the four attacks plus Acc1/Acc2 over already-collected samples.
AttackReport score_attack_samples(const std::vector<AttackSample>& samples,
                                  const AttackModel& attack_model,
                                  const ThresholdSet& thresholds);

/// Runs all four attacks against the entry participant's model, routing
/// every query through the defense gateway (cfg.enabled toggles defense).
AttackReport run_attack_suite(const DefenseContext& ctx, const DefenseConfig& cfg,
                              const std::vector<Image>& member_images,
                              const std::vector<int>& member_labels,
                              const std::vector<Image>& nonmember_images,
                              const std::vector<int>& nonmember_labels,
                              const AttackModel& attack_model,
                              const ThresholdSet& thresholds);

}  // namespace augmix
