#include "augmix/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace augmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one optional key and remembers it, so unknown keys can be rejected.
struct KeyReader {
    const json& j;
    std::set<std::string> known;

    template <typename T>
    void operator()(const char* key, T& out) {
        known.insert(key);
        if (j.contains(key)) out = j.at(key).get<T>();
    }

    void check_unknown() const {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!known.count(it.key()))
                throw std::invalid_argument("unknown config key: " + it.key());
    }
};

template <typename Fn>
auto with_stage(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error("experiment stage '" + stage + "' failed: " + e.what());
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    KeyReader read_key{j, {}};
    read_key("dataset_name", c.dataset_name);
    read_key("dataset_format", c.dataset_format);
    read_key("train_images", c.train_images);
    read_key("train_labels", c.train_labels);
    read_key("test_images", c.test_images);
    read_key("test_labels", c.test_labels);
    read_key("train_dir", c.train_dir);
    read_key("test_dir", c.test_dir);
    read_key("n_cls", c.n_cls);
    read_key("n_participants", c.n_participants);
    read_key("topology", c.topology);
    read_key("rounds", c.rounds);
    read_key("arch", c.arch);
    read_key("epochs", c.epochs);
    read_key("batch_size", c.batch_size);
    read_key("learning_rate", c.learning_rate);
    read_key("momentum", c.momentum);
    read_key("weight_decay", c.weight_decay);
    read_key("seed", c.seed);
    read_key("attacker", c.attacker);
    read_key("eval_size", c.eval_size);
    read_key("k_shadows", c.k_shadows);
    read_key("shadow_epochs", c.shadow_epochs);
    read_key("defense_enabled", c.defense_enabled);
    read_key("tune", c.tune);
    read_key("aug_n", c.aug_n);
    read_key("aug_w", c.aug_w);
    read_key("alpha", c.alpha);
    read_key("alpha_grid", c.alpha_grid);
    read_key("refinement_steps", c.refinement_steps);
    read_key("pca_scalar_stats", c.pca_scalar_stats);
    read_key("max_train", c.max_train);
    read_key("max_test", c.max_test);
    read_key("metrics_sample", c.metrics_sample);
    read_key("reuse_checkpoints", c.reuse_checkpoints);
    read_key("out_dir", c.out_dir);
    read_key.check_unknown();
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json() const {
    json j{{"dataset_name", dataset_name},
           {"dataset_format", dataset_format},
           {"train_images", train_images},
           {"train_labels", train_labels},
           {"test_images", test_images},
           {"test_labels", test_labels},
           {"train_dir", train_dir},
           {"test_dir", test_dir},
           {"n_cls", n_cls},
           {"n_participants", n_participants},
           {"topology", topology},
           {"rounds", rounds},
           {"arch", arch},
           {"epochs", epochs},
           {"batch_size", batch_size},
           {"learning_rate", learning_rate},
           {"momentum", momentum},
           {"weight_decay", weight_decay},
           {"seed", seed},
           {"attacker", attacker},
           {"eval_size", eval_size},
           {"k_shadows", k_shadows},
           {"shadow_epochs", shadow_epochs},
           {"defense_enabled", defense_enabled},
           {"tune", tune},
           {"aug_n", aug_n},
           {"aug_w", aug_w},
           {"alpha", alpha},
           {"alpha_grid", alpha_grid},
           {"refinement_steps", refinement_steps},
           {"pca_scalar_stats", pca_scalar_stats},
           {"max_train", max_train},
           {"max_test", max_test},
           {"metrics_sample", metrics_sample},
           {"reuse_checkpoints", reuse_checkpoints},
           {"out_dir", out_dir}};
    return j.dump(2);
}

DefenseConfig ExperimentConfig::defense() const {
    DefenseConfig d;
    d.intensity = AugIntensity{aug_n, aug_w};
    d.alpha = FusionWeight{alpha};
    d.enabled = defense_enabled;
    return d;
}

std::string ExperimentConfig::topology_label() const {
    if (topology == "star") return attacker == "leaf" ? "star-leaf" : "star-center";
    return topology;
}

DefenseContext ExperimentEnv::context() const {
    DefenseContext ctx;
    ctx.topology = &topo;
    ctx.participants = &participants;
    ctx.entry_id = entry_id;
    ctx.gallery = &gallery;
    ctx.means = means;
    ctx.stds = stds;
    return ctx;
}

namespace {

LabeledDataset cap_dataset(LabeledDataset ds, int cap, uint64_t seed) {
    if (cap <= 0 || ds.size() <= size_t(cap)) return ds;
    // Per-class proportional subsample so every class survives the cap.
    std::mt19937_64 rng(seed);
    std::vector<size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    LabeledDataset out;
    out.n_cls = ds.n_cls;
    out.split = ds.split;
    for (size_t k = 0; k < size_t(cap); ++k) {
        out.images.push_back(std::move(ds.images[order[k]]));
        out.labels.push_back(ds.labels[order[k]]);
    }
    return out;
}

std::vector<StandardizedImage> standardize_all(const std::vector<Image>& images,
                                               const std::vector<float>& means,
                                               const std::vector<float>& stds) {
    std::vector<StandardizedImage> out;
    out.reserve(images.size());
    for (const Image& img : images) out.push_back(standardize(img, means, stds));
    return out;
}

}  // namespace

ExperimentEnv prepare_experiment(const ExperimentConfig& cfg) {
    ExperimentEnv env;
    env.cfg = cfg;

    with_stage("ingest", [&] {
        if (cfg.dataset_format == "idx") {
            env.train_full = load_idx(cfg.train_images, cfg.train_labels, cfg.n_cls);
            env.test_full = load_idx(cfg.test_images, cfg.test_labels, cfg.n_cls);
        } else {
            env.train_full = load_dataset(cfg.train_dir, cfg.dataset_format);
            env.test_full = load_dataset(cfg.test_dir, cfg.dataset_format);
        }
        env.train_full.split = "train";
        env.test_full.split = "test";
        env.train_full = cap_dataset(std::move(env.train_full), cfg.max_train,
                                     derive_seed(cfg.seed, "cap_train"));
        env.test_full = cap_dataset(std::move(env.test_full), cfg.max_test,
                                    derive_seed(cfg.seed, "cap_test"));
        channel_stats(env.train_full, &env.means, &env.stds);
    });

    std::vector<LabeledDataset> parts;
    with_stage("partition", [&] {
        parts = partition_iid(env.train_full, cfg.n_participants,
                              derive_seed(cfg.seed, "partition"));
    });

    with_stage("topology", [&] {
        env.topo = build_topology(topology_kind_from_string(cfg.topology),
                                  cfg.n_participants);
        env.entry_id = 0;
        if (cfg.topology == "star" && cfg.attacker == "leaf") env.entry_id = 1;
    });

    with_stage("index", [&] {
        env.participants.resize(cfg.n_participants);
        for (int i = 0; i < cfg.n_participants; ++i) {
            Participant& p = env.participants[i];
            p.id = i;
            if (cfg.topology == "star")
                p.role = i == 0 ? ParticipantRole::Center : ParticipantRole::Leaf;
            p.index = build_hash_index(parts[i].images, i);
            p.train_labels = parts[i].labels;
            p.train_inputs = standardize_all(parts[i].images, env.means, env.stds);
        }
        env.union_index.owner = -1;
        for (const Participant& p : env.participants)
            env.union_index.entries.insert(env.union_index.entries.end(),
                                           p.index.entries.begin(), p.index.entries.end());
        std::sort(env.union_index.entries.begin(), env.union_index.entries.end());
    });

    with_stage("gallery", [&] {
        env.gallery = build_gallery(env.train_full.images, env.train_full.labels,
                                    env.train_full.n_cls, cfg.pca_scalar_stats);
    });

    const Image& sample = env.train_full.images[0];
    with_stage("train", [&] {
        fs::path model_dir = fs::path(cfg.out_dir) / "models";
        bool all_present = cfg.reuse_checkpoints;
        if (all_present)
            for (int i = 0; i < cfg.n_participants && all_present; ++i)
                all_present = fs::exists(model_dir / ("participant_" + std::to_string(i) + ".bin"));

        if (all_present) {
            for (int i = 0; i < cfg.n_participants; ++i)
                env.participants[i].model = load_model(
                    (model_dir / ("participant_" + std::to_string(i) + ".bin")).string());
            return;
        }

        // Every participant starts from the same initialization: averaging
        // weights of models that never shared a basin is meaningless.
        ModelParams init =
            init_model(cfg.arch, env.train_full.n_cls, sample.height, sample.width,
                       sample.channels, derive_seed(cfg.seed, "init"));
        for (int i = 0; i < cfg.n_participants; ++i)
            env.participants[i].model = init;

        // rounds == 0 means "substrate only" (hash-stats): keep the init
        // models and leave existing checkpoints and metrics untouched.
        if (cfg.rounds == 0) return;

        TrainConfig tc;
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.learning_rate = float(cfg.learning_rate);
        tc.momentum = float(cfg.momentum);
        tc.weight_decay = float(cfg.weight_decay);
        tc.seed = derive_seed(cfg.seed, "train");

        // Per-round accuracy log on fixed subsamples.
        fs::create_directories(cfg.out_dir);
        std::ofstream metrics(fs::path(cfg.out_dir) / "metrics.csv");
        metrics << "round,participant,train_acc,test_acc\n";
        std::mt19937_64 rng(derive_seed(cfg.seed, "metrics_sample"));
        std::vector<size_t> test_idx(env.test_full.size());
        std::iota(test_idx.begin(), test_idx.end(), 0);
        std::shuffle(test_idx.begin(), test_idx.end(), rng);
        size_t n_sample = std::min<size_t>(cfg.metrics_sample, test_idx.size());
        std::vector<StandardizedImage> test_probe;
        std::vector<int> test_probe_labels;
        for (size_t k = 0; k < n_sample; ++k) {
            test_probe.push_back(
                standardize(env.test_full.images[test_idx[k]], env.means, env.stds));
            test_probe_labels.push_back(env.test_full.labels[test_idx[k]]);
        }

        auto on_round = [&](int round, const std::vector<Participant>& ps) {
            for (const Participant& p : ps) {
                size_t n_tr = std::min<size_t>(cfg.metrics_sample, p.train_inputs.size());
                std::vector<StandardizedImage> tr(p.train_inputs.begin(),
                                                  p.train_inputs.begin() + n_tr);
                std::vector<int> trl(p.train_labels.begin(), p.train_labels.begin() + n_tr);
                metrics << round << "," << p.id << "," << accuracy(p.model, tr, trl) << ","
                        << accuracy(p.model, test_probe, test_probe_labels) << "\n";
            }
        };
        std::function<void(int, const std::vector<Participant>&)> cb;
        if (cfg.metrics_sample > 0) cb = on_round;
        run_federated_training(env.topo, env.participants, cfg.rounds, tc, cb);

        fs::create_directories(model_dir);
        for (int i = 0; i < cfg.n_participants; ++i)
            save_model(env.participants[i].model,
                       (model_dir / ("participant_" + std::to_string(i) + ".bin")).string());
    });

    with_stage("attack_calibration", [&] {
        // Attacker auxiliary pool: first half of the shuffled test set.
        // Eval non-members come from the disjoint second half.
        std::mt19937_64 rng(derive_seed(cfg.seed, "testsplit"));
        std::vector<size_t> idx(env.test_full.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        size_t half = idx.size() / 2;

        std::vector<StandardizedImage> aux_inputs;
        std::vector<int> aux_labels;
        for (size_t k = 0; k < half; ++k) {
            aux_inputs.push_back(
                standardize(env.test_full.images[idx[k]], env.means, env.stds));
            aux_labels.push_back(env.test_full.labels[idx[k]]);
        }

        TrainConfig sc;
        sc.epochs = cfg.shadow_epochs > 0 ? cfg.shadow_epochs
                                          : std::min(cfg.epochs * cfg.rounds, 30);
        sc.batch_size = cfg.batch_size;
        sc.learning_rate = float(cfg.learning_rate);
        sc.momentum = float(cfg.momentum);
        sc.weight_decay = float(cfg.weight_decay);
        sc.seed = derive_seed(cfg.seed, "shadow");

        ShadowAttackResult shadow = train_shadow_attack(
            aux_inputs, aux_labels, cfg.arch, env.train_full.n_cls, cfg.k_shadows, sc);
        env.attack_model = shadow.model;
        env.thresholds = calibrate_thresholds(shadow.shadow_samples, env.train_full.n_cls);

        // Balanced eval sets under the master seed.
        size_t nonmember_avail = idx.size() - half;
        size_t eval_n = std::min<size_t>(
            {size_t(cfg.eval_size), env.train_full.size(), nonmember_avail});
        std::mt19937_64 rng2(derive_seed(cfg.seed, "eval"));
        std::vector<size_t> member_idx(env.train_full.size());
        std::iota(member_idx.begin(), member_idx.end(), 0);
        std::shuffle(member_idx.begin(), member_idx.end(), rng2);
        for (size_t k = 0; k < eval_n; ++k) {
            env.eval_member_images.push_back(env.train_full.images[member_idx[k]]);
            env.eval_member_labels.push_back(env.train_full.labels[member_idx[k]]);
            env.eval_nonmember_images.push_back(env.test_full.images[idx[half + k]]);
            env.eval_nonmember_labels.push_back(env.test_full.labels[idx[half + k]]);
        }
    });

    return env;
}

DefenseEvaluator::DefenseEvaluator(const ExperimentEnv& env) : env_(env) {
    auto add = [&](const Image& img, int label, bool is_member) {
        CachedQuery q;
        q.hash = compute_phash(img);
        q.detected = membership_query(env_.topo, env_.participants, env_.entry_id, q.hash);
        q.label = label;
        q.is_member = is_member;
        q.image = &img;
        StandardizedImage s = standardize(img, env_.means, env_.stds);
        q.bypass_probs = predict(env_.participants[env_.entry_id].model, s).probs;
        queries_.push_back(std::move(q));
    };
    for (size_t i = 0; i < env.eval_member_images.size(); ++i)
        add(env.eval_member_images[i], env.eval_member_labels[i], true);
    for (size_t i = 0; i < env.eval_nonmember_images.size(); ++i)
        add(env.eval_nonmember_images[i], env.eval_nonmember_labels[i], false);
    aug_cache_.assign(queries_.size(), {});
}

const Image& DefenseEvaluator::augmented(size_t qi, int aug_num) {
    auto& slots = aug_cache_[qi];
    if (static_cast<int>(slots.size()) <= aug_num) slots.resize(aug_num + 1);
    if (!slots[aug_num]) {
        int aug_key = derive_aug_key(queries_[qi].hash);
        slots[aug_num] = apply_augmentations(*queries_[qi].image,
                                             select_augmentations(aug_key, aug_num));
    }
    return *slots[aug_num];
}

AttackReport DefenseEvaluator::evaluate(const DefenseConfig& cfg, bool defended) {
    const ModelParams& model = env_.participants[env_.entry_id].model;
    std::vector<AttackSample> samples;
    samples.reserve(queries_.size());
    for (size_t qi = 0; qi < queries_.size(); ++qi) {
        const CachedQuery& q = queries_[qi];
        AttackSample s;
        s.true_label = q.label;
        s.is_member = q.is_member;
        if (!defended || !q.detected) {
            s.probs = q.bypass_probs;
        } else {
            int aug_num = derive_aug_num(q.hash, cfg.intensity);
            int pca_key = derive_pca_key(q.hash, env_.gallery.n_cls);
            Image fused =
                fuse(augmented(qi, aug_num), env_.gallery.images[pca_key], cfg.alpha);
            s.probs = predict(model, standardize(fused, env_.means, env_.stds)).probs;
        }
        samples.push_back(std::move(s));
    }
    return score_attack_samples(samples, env_.attack_model, env_.thresholds);
}

F1Vector DefenseEvaluator::evaluate_f1_vector(const DefenseConfig& cfg) {
    AttackReport r = evaluate(cfg, true);
    return {r.f1_binary, r.f1_correctness, r.f1_entropy, r.f1_mentropy};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentEnv env = prepare_experiment(cfg);
    fs::create_directories(cfg.out_dir);

    with_stage("reports", [&] {
        save_gallery(env.gallery, (fs::path(cfg.out_dir) / "gallery").string());
        std::vector<PHash64> test_hashes;
        for (const Image& img : env.test_full.images)
            test_hashes.push_back(compute_phash(img));
        std::ofstream dup(fs::path(cfg.out_dir) / "duplicates.csv");
        dup << duplicate_stats(env.union_index, test_hashes).to_csv();
    });

    ExperimentResult result;
    DefenseContext ctx = env.context();

    with_stage("attack_undefended", [&] {
        DefenseConfig off = cfg.defense();
        off.enabled = false;
        result.undefended = run_attack_suite(
            ctx, off, env.eval_member_images, env.eval_member_labels,
            env.eval_nonmember_images, env.eval_nonmember_labels, env.attack_model,
            env.thresholds);
    });

    result.used_defense = cfg.defense();
    if (cfg.tune) {
        with_stage("tune", [&] {
            SearchSpace space = SearchSpace::defaults();
            if (!cfg.alpha_grid.empty()) space.alpha_grid = cfg.alpha_grid;
            space.refinement_steps = cfg.refinement_steps;
            DefenseEvaluator evaluator(env);
            TunerResult tr = search_defense_params(
                space, [&](const DefenseConfig& c) { return evaluator.evaluate_f1_vector(c); });
            write_tuner_csv(tr, (fs::path(cfg.out_dir) / "tuner_evals.csv").string());
            std::ofstream((fs::path(cfg.out_dir) / "tuner.json").string())
                << nlohmann::json{{"alpha", tr.best.alpha.alpha},
                                  {"aug_n", tr.best.intensity.n},
                                  {"aug_w", tr.best.intensity.w},
                                  {"deviation", tr.deviation},
                                  {"in_range", tr.in_range}}
                       .dump(2)
                << "\n";
            result.used_defense = tr.best;
            result.tuner = std::move(tr);
        });
    }

    if (cfg.defense_enabled) {
        with_stage("attack_defended", [&] {
            DefenseConfig on = result.used_defense;
            on.enabled = true;
            result.defended = run_attack_suite(
                ctx, on, env.eval_member_images, env.eval_member_labels,
                env.eval_nonmember_images, env.eval_nonmember_labels, env.attack_model,
                env.thresholds);
        });
    }

    with_stage("report_csv", [&] {
        std::ofstream rep(fs::path(cfg.out_dir) / "report.csv");
        rep << AttackReport::csv_header() << "\n";
        rep << result.undefended.to_csv_row(cfg.dataset_name, cfg.topology_label(), "no")
            << "\n";
        if (result.defended)
            rep << result.defended->to_csv_row(cfg.dataset_name, cfg.topology_label(), "yes")
                << "\n";
    });

    return result;
}

std::vector<SweepRow> sweep_alpha(const ExperimentEnv& env, const DefenseConfig& base,
                                  const std::vector<double>& alphas) {
    DefenseEvaluator evaluator(env);
    std::vector<SweepRow> rows;
    for (double a : alphas) {
        DefenseConfig c = base;
        c.alpha.alpha = a;
        rows.push_back({"alpha", a, evaluator.evaluate(c, true)});
    }
    return rows;
}

std::vector<SweepRow> sweep_intensity(const ExperimentEnv& env, const DefenseConfig& base,
                                      const std::vector<AugIntensity>& intensities) {
    DefenseEvaluator evaluator(env);
    std::vector<SweepRow> rows;
    for (const AugIntensity& in : intensities) {
        DefenseConfig c = base;
        c.intensity = in;
        rows.push_back({"expected_aug", in.expected_count(), evaluator.evaluate(c, true)});
    }
    return rows;
}

std::vector<SweepRow> sweep_max_conf(const ExperimentEnv& env,
                                     const std::vector<double>& values) {
    // Clip the undefended prediction vectors directly.
    DefenseContext ctx = env.context();
    std::vector<AttackSample> raw;
    auto collect = [&](const std::vector<Image>& images, const std::vector<int>& labels,
                       bool member) {
        for (size_t i = 0; i < images.size(); ++i) {
            StandardizedImage s = standardize(images[i], ctx.means, ctx.stds);
            raw.push_back({predict(env.participants[env.entry_id].model, s).probs,
                           labels[i], member});
        }
    };
    collect(env.eval_member_images, env.eval_member_labels, true);
    collect(env.eval_nonmember_images, env.eval_nonmember_labels, false);

    std::vector<SweepRow> rows;
    for (double mc : values) {
        std::vector<AttackSample> clipped = raw;
        for (AttackSample& s : clipped) {
            PredictionVector p{s.probs};
            s.probs = clip_confidence(p, mc).probs;
        }
        rows.push_back({"max_conf", mc,
                        score_attack_samples(clipped, env.attack_model, env.thresholds)});
    }
    return rows;
}

std::vector<SweepRow> sweep_weight_decay(const ExperimentConfig& cfg,
                                         const std::vector<double>& values) {
    std::vector<SweepRow> rows;
    for (double wd : values) {
        ExperimentConfig c = cfg;
        c.weight_decay = wd;
        c.defense_enabled = false;
        c.tune = false;
        c.reuse_checkpoints = false;
        c.out_dir = (fs::path(cfg.out_dir) / ("wd_" + std::to_string(wd))).string();
        ExperimentResult r = run_experiment(c);
        rows.push_back({"weight_decay", wd, r.undefended});
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream f(path);
    f << "param,value,acc1,acc2,binary,m1,m2,m3\n";
    f.precision(6);
    f << std::fixed;
    for (const SweepRow& r : rows)
        f << r.param << "," << r.value << "," << r.report.acc_train << ","
          << r.report.acc_test << "," << r.report.f1_binary << ","
          << r.report.f1_correctness << "," << r.report.f1_entropy << ","
          << r.report.f1_mentropy << "\n";
}

void write_tuner_csv(const TunerResult& result, const std::string& path) {
    std::ofstream f(path);
    f << "alpha,aug_n,aug_w,binary,m1,m2,m3,deviation\n";
    f.precision(6);
    f << std::fixed;
    for (const EvaluatedConfig& ec : result.evaluated) {
        std::ostringstream ns, ws;
        for (size_t i = 0; i < ec.config.intensity.n.size(); ++i) {
            if (i) { ns << ";"; ws << ";"; }
            ns << ec.config.intensity.n[i];
            ws << ec.config.intensity.w[i];
        }
        f << ec.config.alpha.alpha << "," << ns.str() << "," << ws.str() << ","
          << ec.f1[0] << "," << ec.f1[1] << "," << ec.f1[2] << "," << ec.f1[3] << ","
          << ec.deviation << "\n";
    }
}

}  // namespace augmix
