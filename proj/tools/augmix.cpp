// augmix: desk-scale DFL testbed with a pHash-gated query-transformation
// defense against membership inference, the four reference attacks, and
// the automatic defense-intensity search.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "augmix/experiment.hpp"
#include "augmix/imageio.hpp"

namespace fs = std::filesystem;
using namespace augmix;

namespace {

// Every config key gets a CLI override flag of the same name.
struct Overrides {
    std::optional<std::string> dataset_name, dataset_format, train_images, train_labels,
        test_images, test_labels, train_dir, test_dir, topology, arch, attacker, out_dir;
    std::optional<int> n_cls, n_participants, rounds, epochs, batch_size, eval_size,
        k_shadows, shadow_epochs, refinement_steps, max_train, max_test, metrics_sample;
    std::optional<double> learning_rate, momentum, weight_decay, alpha;
    std::optional<uint64_t> seed;
    std::optional<bool> defense_enabled, tune, pca_scalar_stats, reuse_checkpoints;
    std::optional<std::vector<int>> aug_n;
    std::optional<std::vector<double>> aug_w, alpha_grid;

    void apply(ExperimentConfig& c) const {
        auto set = [](auto& dst, const auto& src) { if (src) dst = *src; };
        set(c.dataset_name, dataset_name);
        set(c.dataset_format, dataset_format);
        set(c.train_images, train_images);
        set(c.train_labels, train_labels);
        set(c.test_images, test_images);
        set(c.test_labels, test_labels);
        set(c.train_dir, train_dir);
        set(c.test_dir, test_dir);
        set(c.topology, topology);
        set(c.arch, arch);
        set(c.attacker, attacker);
        set(c.out_dir, out_dir);
        set(c.n_cls, n_cls);
        set(c.n_participants, n_participants);
        set(c.rounds, rounds);
        set(c.epochs, epochs);
        set(c.batch_size, batch_size);
        set(c.eval_size, eval_size);
        set(c.k_shadows, k_shadows);
        set(c.shadow_epochs, shadow_epochs);
        set(c.refinement_steps, refinement_steps);
        set(c.max_train, max_train);
        set(c.max_test, max_test);
        set(c.metrics_sample, metrics_sample);
        set(c.learning_rate, learning_rate);
        set(c.momentum, momentum);
        set(c.weight_decay, weight_decay);
        set(c.alpha, alpha);
        set(c.seed, seed);
        set(c.defense_enabled, defense_enabled);
        set(c.tune, tune);
        set(c.pca_scalar_stats, pca_scalar_stats);
        set(c.reuse_checkpoints, reuse_checkpoints);
        set(c.aug_n, aug_n);
        set(c.aug_w, aug_w);
        set(c.alpha_grid, alpha_grid);
    }
};

void add_config_options(CLI::App* cmd, std::string& config_path, Overrides& ov) {
    cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--dataset_name", ov.dataset_name);
    cmd->add_option("--dataset_format", ov.dataset_format);
    cmd->add_option("--train_images", ov.train_images);
    cmd->add_option("--train_labels", ov.train_labels);
    cmd->add_option("--test_images", ov.test_images);
    cmd->add_option("--test_labels", ov.test_labels);
    cmd->add_option("--train_dir", ov.train_dir);
    cmd->add_option("--test_dir", ov.test_dir);
    cmd->add_option("--topology", ov.topology);
    cmd->add_option("--arch", ov.arch);
    cmd->add_option("--attacker", ov.attacker);
    cmd->add_option("--out_dir", ov.out_dir);
    cmd->add_option("--n_cls", ov.n_cls);
    cmd->add_option("--n_participants", ov.n_participants);
    cmd->add_option("--rounds", ov.rounds);
    cmd->add_option("--epochs", ov.epochs);
    cmd->add_option("--batch_size", ov.batch_size);
    cmd->add_option("--eval_size", ov.eval_size);
    cmd->add_option("--k_shadows", ov.k_shadows);
    cmd->add_option("--shadow_epochs", ov.shadow_epochs);
    cmd->add_option("--refinement_steps", ov.refinement_steps);
    cmd->add_option("--max_train", ov.max_train);
    cmd->add_option("--max_test", ov.max_test);
    cmd->add_option("--metrics_sample", ov.metrics_sample);
    cmd->add_option("--learning_rate", ov.learning_rate);
    cmd->add_option("--momentum", ov.momentum);
    cmd->add_option("--weight_decay", ov.weight_decay);
    cmd->add_option("--alpha", ov.alpha);
    cmd->add_option("--seed", ov.seed);
    cmd->add_option("--defense_enabled", ov.defense_enabled);
    cmd->add_option("--tune", ov.tune);
    cmd->add_option("--pca_scalar_stats", ov.pca_scalar_stats);
    cmd->add_option("--reuse_checkpoints", ov.reuse_checkpoints);
    cmd->add_option("--aug_n", ov.aug_n);
    cmd->add_option("--aug_w", ov.aug_w);
    cmd->add_option("--alpha_grid", ov.alpha_grid);
}

ExperimentConfig load_config(const std::string& path, const Overrides& ov) {
    ExperimentConfig cfg = ExperimentConfig::from_json_file(path);
    ov.apply(cfg);
    return cfg;
}

void print_report(const ExperimentResult& r, const ExperimentConfig& cfg) {
    std::cout << AttackReport::csv_header() << "\n"
              << r.undefended.to_csv_row(cfg.dataset_name, cfg.topology_label(), "no")
              << "\n";
    if (r.defended)
        std::cout << r.defended->to_csv_row(cfg.dataset_name, cfg.topology_label(), "yes")
                  << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AugMixCloak DFL testbed"};
    app.require_subcommand(1);

    std::string config_path, image_path, sweep_kind = "alpha";
    bool list_ops = false;
    Overrides ov;

    CLI::App* train = app.add_subcommand("train", "ingest, partition, federated training");
    CLI::App* attack = app.add_subcommand("attack", "full pipeline: train, attack, defend, report");
    CLI::App* defend = app.add_subcommand("defend", "answer one query through the defense gateway");
    CLI::App* tune = app.add_subcommand("tune", "automatic defense-intensity search");
    CLI::App* hash_stats = app.add_subcommand("hash-stats", "duplicate-hash statistics");
    CLI::App* ops = app.add_subcommand("ops", "augmentation operator registry");
    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweeps (alpha, intensity, max-conf, weight-decay)");

    for (CLI::App* cmd : {train, attack, defend, tune, hash_stats, sweep})
        add_config_options(cmd, config_path, ov);
    defend->add_option("--image", image_path, "query image (png/ppm/pgm)")->required();
    ops->add_flag("--list", list_ops, "list the 12 operators in registry order");
    sweep->add_option("--kind", sweep_kind, "alpha | intensity | max-conf | weight-decay");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ops->parsed()) {
            (void)list_ops;
            const auto& reg = augmentation_registry();
            for (size_t i = 0; i < reg.size(); ++i)
                std::cout << i << "," << reg[i].name << "\n";
            return 0;
        }

        if (train->parsed()) {
            ExperimentConfig cfg = load_config(config_path, ov);
            ExperimentEnv env = prepare_experiment(cfg);
            save_gallery(env.gallery, (fs::path(cfg.out_dir) / "gallery").string());
            std::cout << "trained " << cfg.n_participants << " participants ("
                      << cfg.topology << ", " << cfg.rounds << " rounds); checkpoints in "
                      << cfg.out_dir << "/models\n";
            return 0;
        }

        if (attack->parsed()) {
            ExperimentConfig cfg = load_config(config_path, ov);
            ExperimentResult r = run_experiment(cfg);
            print_report(r, cfg);
            return 0;
        }

        if (tune->parsed()) {
            ExperimentConfig cfg = load_config(config_path, ov);
            cfg.tune = true;
            ExperimentResult r = run_experiment(cfg);
            const TunerResult& t = *r.tuner;
            nlohmann::json j{{"alpha", t.best.alpha.alpha},
                             {"aug_n", t.best.intensity.n},
                             {"aug_w", t.best.intensity.w},
                             {"deviation", t.deviation},
                             {"f1", t.f1_vector},
                             {"in_range", t.in_range},
                             {"evaluations", t.evaluated.size()}};
            std::cout << j.dump(2) << "\n";
            print_report(r, cfg);
            return 0;
        }

        if (defend->parsed()) {
            ExperimentConfig cfg = load_config(config_path, ov);
            cfg.reuse_checkpoints = true;
            ExperimentEnv env = prepare_experiment(cfg);
            Image img = read_image_file(image_path);
            auto [pred, decision] = answer_query(env.context(), img, cfg.defense());
            nlohmann::json j{{"prediction", pred.probs},
                             {"decision", nlohmann::json::parse(decision.to_json())}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (hash_stats->parsed()) {
            ExperimentConfig cfg = load_config(config_path, ov);
            cfg.rounds = 0;  // indexes only, no training needed
            ExperimentEnv env = prepare_experiment(cfg);
            std::vector<PHash64> test_hashes;
            for (const Image& img : env.test_full.images)
                test_hashes.push_back(compute_phash(img));
            DuplicateReport rep = duplicate_stats(env.union_index, test_hashes);
            fs::create_directories(cfg.out_dir);
            std::ofstream((fs::path(cfg.out_dir) / "duplicates.csv").string())
                << rep.to_csv();
            std::cout << rep.to_csv();
            return 0;
        }

        if (sweep->parsed()) {
            ExperimentConfig cfg = load_config(config_path, ov);
            std::vector<SweepRow> rows;
            if (sweep_kind == "weight-decay") {
                rows = sweep_weight_decay(cfg, {0.0, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2});
            } else {
                ExperimentEnv env = prepare_experiment(cfg);
                if (sweep_kind == "alpha") {
                    rows = sweep_alpha(env, cfg.defense(), {0.5, 0.6, 0.7, 0.8, 0.9});
                } else if (sweep_kind == "intensity") {
                    std::vector<AugIntensity> grid;
                    for (int a = 0; a <= 2; ++a)
                        for (double w1 : {0.0, 0.5, 1.0})
                            grid.push_back({{a, a + 1}, {1.0 - w1, w1}});
                    rows = sweep_intensity(env, cfg.defense(), grid);
                } else if (sweep_kind == "max-conf") {
                    rows = sweep_max_conf(env, {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
                } else {
                    std::cerr << "unknown sweep kind: " << sweep_kind << "\n";
                    return 2;
                }
            }
            fs::create_directories(cfg.out_dir);
            std::string out = (fs::path(cfg.out_dir) / "sweep.csv").string();
            write_sweep_csv(rows, out);
            std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
