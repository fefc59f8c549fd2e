#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "augmix/classifier.hpp"
#include "support.hpp"

using namespace augmix;

namespace {

StandardizedImage random_input(int h, int w, int c, uint64_t seed) {
    Image img = testsup::random_image(h, w, c, seed);
    std::vector<float> means(c, 0.5f), stds(c, 0.25f);
    return standardize(img, means, stds);
}

// Central finite differences on sample_loss: the gradient oracle.
void check_gradient(const std::string& arch, float wd) {
    ModelParams model = init_model(arch, 3, 8, 8, 1, 99);
    StandardizedImage x = random_input(8, 8, 1, 7);
    int label = 1;
    std::vector<double> grad = sample_gradient(model, x, label, wd);
    REQUIRE(grad.size() == model.theta.size());

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<size_t> pick(0, model.theta.size() - 1);
    const double eps = 1e-5;
    for (int k = 0; k < 20; ++k) {
        size_t i = pick(rng);
        ModelParams mp = model, mm = model;
        mp.theta[i] += float(eps);
        mm.theta[i] -= float(eps);
        // theta is float storage: divide by the step that was actually taken
        double step = double(mp.theta[i]) - double(mm.theta[i]);
        double fd = (sample_loss(mp, x, label, wd) -
                     sample_loss(mm, x, label, wd)) / step;
        double scale = std::max({1.0, std::abs(fd), std::abs(grad[i])});
        CHECK(std::abs(fd - grad[i]) / scale <= 1e-4);
    }
}

// Separable 2-class toy set: class by which half of the image is bright.
void make_toy(std::vector<StandardizedImage>* xs, std::vector<int>* ys, int n,
              uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 0.25f);
    std::vector<float> means{0.5f}, stds{0.25f};
    for (int k = 0; k < n; ++k) {
        int label = k % 2;
        Image img(8, 8, 1);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                bool bright = label == 0 ? (x < 4) : (x >= 4);
                img.at(y, x, 0) = (bright ? 0.75f : 0.0f) + u(rng);
            }
        xs->push_back(standardize(img, means, stds));
        ys->push_back(label);
    }
}

float l2(const std::vector<float>& v) {
    double s = 0.0;
    for (float x : v) s += double(x) * x;
    return float(std::sqrt(s));
}

}  // namespace

TEST_CASE("prediction is a softmax; argmax breaks ties at the lowest index") {
    ModelParams model = init_model("mlp", 4, 6, 6, 1, 1);
    PredictionVector p = predict(model, random_input(6, 6, 1, 2));
    REQUIRE(p.probs.size() == 4);
    double sum = 0.0;
    for (float v : p.probs) {
        CHECK(v >= 0.0f);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));

    PredictionVector tie{{0.25f, 0.4f, 0.4f, 0.05f}};
    CHECK(tie.argmax() == 1);
}

TEST_CASE("init is seed-deterministic with zero biases") {
    ModelParams a = init_model("cnn_small", 5, 10, 10, 1, 42);
    ModelParams b = init_model("cnn_small", 5, 10, 10, 1, 42);
    ModelParams c = init_model("cnn_small", 5, 10, 10, 1, 43);
    CHECK(a.theta == b.theta);
    CHECK(a.theta != c.theta);
    bool found_bias = false;
    for (const auto& s : a.layout)
        if (s.name.find("bias") != std::string::npos) {
            found_bias = true;
            for (size_t i = s.offset; i < s.offset + s.size; ++i)
                CHECK(a.theta[i] == 0.0f);
        }
    CHECK(found_bias);
}

TEST_CASE("analytic gradient matches finite differences (mlp)") { check_gradient("mlp", 0.0f); }
TEST_CASE("analytic gradient matches finite differences (mlp, weight decay)") {
    check_gradient("mlp", 0.1f);
}
TEST_CASE("analytic gradient matches finite differences (cnn_small)") {
    check_gradient("cnn_small", 0.0f);
}

TEST_CASE("training fits a separable toy set to >= 0.95 accuracy") {
    std::vector<StandardizedImage> xs;
    std::vector<int> ys;
    make_toy(&xs, &ys, 200, 31);
    ModelParams model = init_model("mlp", 2, 8, 8, 1, 3);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.1f;
    cfg.seed = 4;
    ModelParams trained = train_local(model, xs, ys, cfg);
    CHECK(accuracy(trained, xs, ys) >= 0.95f);
}

TEST_CASE("weight decay shrinks the parameter norm") {
    std::vector<StandardizedImage> xs;
    std::vector<int> ys;
    make_toy(&xs, &ys, 60, 8);
    ModelParams model = init_model("mlp", 2, 8, 8, 1, 3);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.05f;
    cfg.seed = 4;
    ModelParams plain = train_local(model, xs, ys, cfg);
    cfg.weight_decay = 10.0f;
    ModelParams decayed = train_local(model, xs, ys, cfg);
    CHECK(l2(decayed.theta) < l2(plain.theta));
}

TEST_CASE("training is deterministic in (seed, data, config)") {
    std::vector<StandardizedImage> xs;
    std::vector<int> ys;
    make_toy(&xs, &ys, 40, 15);
    ModelParams model = init_model("cnn_small", 2, 8, 8, 1, 9);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.05f;
    cfg.seed = 10;
    ModelParams a = train_local(model, xs, ys, cfg);
    ModelParams b = train_local(model, xs, ys, cfg);
    CHECK(a.theta == b.theta);
    cfg.seed = 11;
    ModelParams c = train_local(model, xs, ys, cfg);
    CHECK(a.theta != c.theta);
}

TEST_CASE("average_models is the elementwise mean") {
    ModelParams a = init_model("mlp", 2, 4, 4, 1, 1);
    ModelParams b = a, c = a;
    for (auto& v : b.theta) v = 1.0f;
    for (auto& v : c.theta) v = 3.0f;
    ModelParams avg = average_models({b, c});
    for (float v : avg.theta) CHECK(v == doctest::Approx(2.0f));

    ModelParams other = init_model("mlp", 3, 4, 4, 1, 1);
    CHECK_THROWS(average_models({a, other}));
}

TEST_CASE("checkpoint round-trip preserves everything") {
    ModelParams model = init_model("cnn_small", 7, 12, 10, 3, 21);
    std::string path = testsup::temp_dir("ckpt") + "/model.bin";
    save_model(model, path);
    ModelParams back = load_model(path);
    CHECK(back.same_arch(model));
    CHECK(back.theta == model.theta);
    REQUIRE(back.layout.size() == model.layout.size());
    for (size_t i = 0; i < model.layout.size(); ++i) {
        CHECK(back.layout[i].name == model.layout[i].name);
        CHECK(back.layout[i].offset == model.layout[i].offset);
        CHECK(back.layout[i].size == model.layout[i].size);
    }
}
