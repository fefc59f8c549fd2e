#include "augmix/mia.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace augmix {

namespace {
constexpr double kLogEps = 1e-30;
double safe_log(double v) { return std::log(std::max(v, kLogEps)); }
}  // namespace

double AttackReport::mean_deviation() const {
    return (std::abs(f1_binary - 0.5) + std::abs(f1_correctness - 0.5) +
            std::abs(f1_entropy - 0.5) + std::abs(f1_mentropy - 0.5)) / 4.0;
}

double AttackReport::max_deviation() const {
    return std::max({std::abs(f1_binary - 0.5), std::abs(f1_correctness - 0.5),
                     std::abs(f1_entropy - 0.5), std::abs(f1_mentropy - 0.5)});
}

std::string AttackReport::csv_header() {
    return "dataset,topology,defense,acc1,acc2,binary,m1,m2,m3";
}

std::string AttackReport::to_csv_row(const std::string& dataset,
                                     const std::string& topology,
                                     const std::string& defense) const {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << dataset << "," << topology << "," << defense << ","
       << acc_train << "," << acc_test << "," << f1_binary << "," << f1_correctness
       << "," << f1_entropy << "," << f1_mentropy;
    return os.str();
}

double entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs) h -= p * safe_log(p);
    return h;
}

double modified_entropy(const std::vector<double>& probs, int true_label) {
    double h = -(1.0 - probs[true_label]) * safe_log(probs[true_label]);
    for (int i = 0; i < static_cast<int>(probs.size()); ++i)
        if (i != true_label) h -= probs[i] * safe_log(1.0 - probs[i]);
    return h;
}

bool correctness_attack(const AttackSample& s) {
    int arg = 0;
    for (int i = 1; i < static_cast<int>(s.probs.size()); ++i)
        if (s.probs[i] > s.probs[arg]) arg = i;
    return arg == s.true_label;
}

namespace {

// Best threshold by balanced accuracy, scanned over midpoints of sorted
// observed values; member is predicted iff value < threshold. Ties go to
// the lowest midpoint.
double best_threshold(std::vector<std::pair<double, bool>> vals) {
    std::sort(vals.begin(), vals.end());
    size_t n_mem = 0, n_non = 0;
    for (auto& [v, m] : vals) (m ? n_mem : n_non)++;
    if (n_mem == 0 || n_non == 0) return vals.empty() ? 0.0 : vals.front().first;

    std::vector<double> candidates;
    for (size_t i = 0; i + 1 < vals.size(); ++i)
        if (vals[i].first < vals[i + 1].first)
            candidates.push_back((vals[i].first + vals[i + 1].first) / 2.0);
    if (candidates.empty()) return vals.front().first;

    double best_thr = candidates.front(), best_ba = -1.0;
    for (double thr : candidates) {
        size_t tp = 0, tn = 0;
        for (auto& [v, m] : vals) {
            bool pred = v < thr;
            if (pred && m) ++tp;
            if (!pred && !m) ++tn;
        }
        double ba = 0.5 * (double(tp) / n_mem + double(tn) / n_non);
        if (ba > best_ba + 1e-12) {
            best_ba = ba;
            best_thr = thr;
        }
    }
    return best_thr;
}

}  // namespace

ThresholdSet calibrate_thresholds(const std::vector<AttackSample>& shadow_samples,
                                  int n_cls) {
    if (shadow_samples.empty())
        throw std::invalid_argument("calibrate_thresholds: no shadow samples");

    std::vector<std::pair<double, bool>> global_ent, global_ment;
    std::vector<std::vector<std::pair<double, bool>>> per_ent(n_cls), per_ment(n_cls);
    for (const AttackSample& s : shadow_samples) {
        double e = entropy(s.probs);
        double me = modified_entropy(s.probs, s.true_label);
        global_ent.push_back({e, s.is_member});
        global_ment.push_back({me, s.is_member});
        per_ent[s.true_label].push_back({e, s.is_member});
        per_ment[s.true_label].push_back({me, s.is_member});
    }
    double g_ent = best_threshold(global_ent);
    double g_ment = best_threshold(global_ment);

    ThresholdSet t;
    t.entropy_thr.resize(n_cls);
    t.mentropy_thr.resize(n_cls);
    for (int c = 0; c < n_cls; ++c) {
        bool has_mem = false, has_non = false;
        for (auto& [v, m] : per_ent[c]) (m ? has_mem : has_non) = true;
        // classes without both groups fall back to the global threshold
        t.entropy_thr[c] = (has_mem && has_non) ? best_threshold(per_ent[c]) : g_ent;
        t.mentropy_thr[c] = (has_mem && has_non) ? best_threshold(per_ment[c]) : g_ment;
    }
    return t;
}

std::vector<double> AttackModel::features(const AttackSample& s) const {
    std::vector<double> f;
    f.reserve(2 * n_cls + 1);
    std::vector<double> sorted = s.probs;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    for (double p : sorted) f.push_back(p);
    f.push_back(-safe_log(s.probs[s.true_label]));  // cross-entropy loss
    for (int c = 0; c < n_cls; ++c) f.push_back(c == s.true_label ? 1.0 : 0.0);
    return f;
}

double AttackModel::score(const AttackSample& s) const {
    std::vector<double> f = features(s);
    double z = bias;
    for (size_t i = 0; i < f.size(); ++i)
        z += weights[i] * (f[i] - feat_mean[i]) / feat_std[i];
    return 1.0 / (1.0 + std::exp(-z));
}

namespace {

AttackModel fit_logistic(const std::vector<AttackSample>& samples, int n_cls) {
    AttackModel m;
    m.n_cls = n_cls;
    size_t dim = 2 * size_t(n_cls) + 1;
    m.weights.assign(dim, 0.0);

    std::vector<std::vector<double>> feats;
    feats.reserve(samples.size());
    for (const AttackSample& s : samples) feats.push_back(m.features(s));

    m.feat_mean.assign(dim, 0.0);
    m.feat_std.assign(dim, 0.0);
    for (const auto& f : feats)
        for (size_t j = 0; j < dim; ++j) m.feat_mean[j] += f[j];
    for (double& v : m.feat_mean) v /= double(feats.size());
    for (const auto& f : feats)
        for (size_t j = 0; j < dim; ++j) {
            double d = f[j] - m.feat_mean[j];
            m.feat_std[j] += d * d;
        }
    for (double& v : m.feat_std) {
        v = std::sqrt(v / double(feats.size()));
        if (v < 1e-12) v = 1.0;
    }
    for (auto& f : feats)
        for (size_t j = 0; j < dim; ++j) f[j] = (f[j] - m.feat_mean[j]) / m.feat_std[j];

    // Full-batch gradient descent; fixed schedule keeps it deterministic.
    const int iters = 500;
    const double lr = 0.5;
    for (int it = 0; it < iters; ++it) {
        std::vector<double> gw(dim, 0.0);
        double gb = 0.0;
        for (size_t i = 0; i < feats.size(); ++i) {
            double z = m.bias;
            for (size_t j = 0; j < dim; ++j) z += m.weights[j] * feats[i][j];
            double p = 1.0 / (1.0 + std::exp(-z));
            double err = p - (samples[i].is_member ? 1.0 : 0.0);
            for (size_t j = 0; j < dim; ++j) gw[j] += err * feats[i][j];
            gb += err;
        }
        double inv = 1.0 / double(feats.size());
        for (size_t j = 0; j < dim; ++j) m.weights[j] -= lr * gw[j] * inv;
        m.bias -= lr * gb * inv;
    }
    return m;
}

}  // namespace

ShadowAttackResult train_shadow_attack(const std::vector<StandardizedImage>& aux_inputs,
                                       const std::vector<int>& aux_labels,
                                       const std::string& arch_id, int n_cls,
                                       int k_shadows, const TrainConfig& cfg) {
    if (k_shadows < 1) throw std::invalid_argument("train_shadow_attack: k_shadows >= 1");
    size_t per_shadow = aux_inputs.size() / (2 * size_t(k_shadows));
    if (per_shadow < 2)
        throw std::invalid_argument("train_shadow_attack: insufficient auxiliary data");

    ShadowAttackResult result;
    const Image& first = aux_inputs[0].img;
    for (int k = 0; k < k_shadows; ++k) {
        size_t base = 2 * size_t(k) * per_shadow;
        std::vector<StandardizedImage> in_split(aux_inputs.begin() + base,
                                                aux_inputs.begin() + base + per_shadow);
        std::vector<int> in_labels(aux_labels.begin() + base,
                                   aux_labels.begin() + base + per_shadow);
        std::vector<StandardizedImage> out_split(
            aux_inputs.begin() + base + per_shadow,
            aux_inputs.begin() + base + 2 * per_shadow);
        std::vector<int> out_labels(aux_labels.begin() + base + per_shadow,
                                    aux_labels.begin() + base + 2 * per_shadow);

        TrainConfig shadow_cfg = cfg;
        shadow_cfg.seed = cfg.seed ^ (0x5AD0u + uint64_t(k));
        ModelParams shadow = init_model(arch_id, n_cls, first.height, first.width,
                                        first.channels, shadow_cfg.seed);
        shadow = train_local(shadow, in_split, in_labels, shadow_cfg);

        for (size_t i = 0; i < in_split.size(); ++i)
            result.shadow_samples.push_back(
                {predict(shadow, in_split[i]).probs, in_labels[i], true});
        for (size_t i = 0; i < out_split.size(); ++i)
            result.shadow_samples.push_back(
                {predict(shadow, out_split[i]).probs, out_labels[i], false});
    }
    result.model = fit_logistic(result.shadow_samples, n_cls);
    return result;
}

double evaluate_f1(const std::vector<bool>& predictions, const std::vector<bool>& truth) {
    if (predictions.size() != truth.size() || predictions.empty())
        throw std::invalid_argument("evaluate_f1: length mismatch or empty");
    size_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] && truth[i]) ++tp;
        else if (predictions[i] && !truth[i]) ++fp;
        else if (!predictions[i] && truth[i]) ++fn;
    }
    double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

AttackReport score_attack_samples(const std::vector<AttackSample>& samples,
                                  const AttackModel& attack_model,
                                  const ThresholdSet& thresholds) {
    std::vector<bool> truth, p_bin, p_corr, p_ent, p_ment;
    size_t member_hits = 0, nonmember_hits = 0, n_mem = 0, n_non = 0;
    for (const AttackSample& s : samples) {
        truth.push_back(s.is_member);
        p_bin.push_back(attack_model.predict_member(s));
        bool correct = correctness_attack(s);
        p_corr.push_back(correct);
        p_ent.push_back(entropy(s.probs) < thresholds.entropy_thr[s.true_label]);
        p_ment.push_back(modified_entropy(s.probs, s.true_label) <
                         thresholds.mentropy_thr[s.true_label]);
        (s.is_member ? n_mem : n_non)++;
        if (correct) (s.is_member ? member_hits : nonmember_hits)++;
    }

    AttackReport rep;
    rep.f1_binary = evaluate_f1(p_bin, truth);
    rep.f1_correctness = evaluate_f1(p_corr, truth);
    rep.f1_entropy = evaluate_f1(p_ent, truth);
    rep.f1_mentropy = evaluate_f1(p_ment, truth);
    rep.acc_train = n_mem == 0 ? 0.0 : double(member_hits) / double(n_mem);
    rep.acc_test = n_non == 0 ? 0.0 : double(nonmember_hits) / double(n_non);
    return rep;
}

AttackReport run_attack_suite(const DefenseContext& ctx, const DefenseConfig& cfg,
                              const std::vector<Image>& member_images,
                              const std::vector<int>& member_labels,
                              const std::vector<Image>& nonmember_images,
                              const std::vector<int>& nonmember_labels,
                              const AttackModel& attack_model,
                              const ThresholdSet& thresholds) {
    std::vector<AttackSample> samples;
    samples.reserve(member_images.size() + nonmember_images.size());
    auto query = [&](const Image& img, int label, bool is_member) {
        auto [pred, decision] = answer_query(ctx, img, cfg);
        samples.push_back({pred.probs, label, is_member});
    };
    for (size_t i = 0; i < member_images.size(); ++i)
        query(member_images[i], member_labels[i], true);
    for (size_t i = 0; i < nonmember_images.size(); ++i)
        query(nonmember_images[i], nonmember_labels[i], false);
    return score_attack_samples(samples, attack_model, thresholds);
}

}  // namespace augmix
