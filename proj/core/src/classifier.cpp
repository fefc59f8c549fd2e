#include "augmix/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace augmix {

int PredictionVector::argmax() const {
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.size()); ++i)
        if (probs[i] > probs[best]) best = i;
    return best;
}

namespace {

struct LayerDef {
    enum Kind { Conv, Relu, Pool, Dense } kind;
    int in_h, in_w, in_c;
    int out_h, out_w, out_c;
    size_t w_off = 0, w_size = 0, b_off = 0, b_size = 0;
};

// Builds the layer list and the theta layout for an architecture.
std::vector<LayerDef> build_arch(const std::string& arch_id, int n_cls, int in_h,
                                 int in_w, int in_c, size_t* total,
                                 std::vector<ModelParams::Slice>* layout) {
    std::vector<LayerDef> layers;
    size_t off = 0;
    auto add_params = [&](LayerDef& l, const std::string& name, size_t w, size_t b) {
        l.w_off = off; l.w_size = w; off += w;
        l.b_off = off; l.b_size = b; off += b;
        if (layout) {
            layout->push_back({name + ".weight", l.w_off, w});
            layout->push_back({name + ".bias", l.b_off, b});
        }
    };
    auto conv = [&](int h, int w, int ci, int co, const std::string& name) {
        LayerDef l{LayerDef::Conv, h, w, ci, h, w, co};
        add_params(l, name, size_t(co) * 3 * 3 * ci, size_t(co));
        layers.push_back(l);
    };
    auto relu = [&](const LayerDef& prev) {
        layers.push_back({LayerDef::Relu, prev.out_h, prev.out_w, prev.out_c,
                          prev.out_h, prev.out_w, prev.out_c});
    };
    auto pool = [&](const LayerDef& prev) {
        layers.push_back({LayerDef::Pool, prev.out_h, prev.out_w, prev.out_c,
                          prev.out_h / 2, prev.out_w / 2, prev.out_c});
    };
    auto dense = [&](int in_dim, int out_dim, const std::string& name) {
        LayerDef l{LayerDef::Dense, 1, 1, in_dim, 1, 1, out_dim};
        add_params(l, name, size_t(in_dim) * out_dim, size_t(out_dim));
        layers.push_back(l);
    };

    if (arch_id == "cnn_small") {
        conv(in_h, in_w, in_c, 16, "conv1");
        relu(layers.back());
        pool(layers.back());
        conv(layers.back().out_h, layers.back().out_w, 16, 32, "conv2");
        relu(layers.back());
        pool(layers.back());
        const LayerDef& p = layers.back();
        dense(p.out_h * p.out_w * p.out_c, 128, "fc1");
        relu(layers.back());
        dense(128, n_cls, "fc2");
    } else if (arch_id == "mlp") {
        dense(in_h * in_w * in_c, 64, "fc1");
        relu(layers.back());
        dense(64, n_cls, "fc2");
    } else {
        throw std::invalid_argument("unknown arch_id: " + arch_id);
    }
    if (total) *total = off;
    return layers;
}

std::vector<LayerDef> arch_of(const ModelParams& m) {
    size_t total = 0;
    auto layers = build_arch(m.arch_id, m.n_cls, m.in_h, m.in_w, m.in_c, &total, nullptr);
    if (total != m.theta.size())
        throw std::invalid_argument("ModelParams: theta length does not match layout");
    return layers;
}

// The compute engine is templated on the scalar type: training and inference
// run in float, sample_loss/sample_gradient run in double so finite-difference
// gradient checks see the smooth function rather than float32 rounding noise.
template <typename T>
struct ForwardCache {
    std::vector<std::vector<T>> acts;  // acts[i] = input of layer i; back = logits
    std::vector<std::vector<int>> pool_arg;
};

template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
    T mx = *std::max_element(logits.begin(), logits.end());
    std::vector<T> p(logits.size());
    T sum = T(0);
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (T& v : p) v /= sum;
    return p;
}

template <typename T>
void conv_forward(const LayerDef& l, const T* theta, const std::vector<T>& in,
                  std::vector<T>& out) {
    const T* W = theta + l.w_off;
    const T* b = theta + l.b_off;
    out.assign(size_t(l.out_h) * l.out_w * l.out_c, T(0));
    for (int y = 0; y < l.out_h; ++y)
        for (int x = 0; x < l.out_w; ++x) {
            T* o = &out[(size_t(y) * l.out_w + x) * l.out_c];
            for (int oc = 0; oc < l.out_c; ++oc) o[oc] = b[oc];
            for (int dy = 0; dy < 3; ++dy) {
                int sy = y + dy - 1;
                if (sy < 0 || sy >= l.in_h) continue;
                for (int dx = 0; dx < 3; ++dx) {
                    int sx = x + dx - 1;
                    if (sx < 0 || sx >= l.in_w) continue;
                    const T* iv = &in[(size_t(sy) * l.in_w + sx) * l.in_c];
                    // weight layout: [oc][dy][dx][ic]
                    for (int ic = 0; ic < l.in_c; ++ic) {
                        T v = iv[ic];
                        for (int oc = 0; oc < l.out_c; ++oc)
                            o[oc] += v * W[((size_t(oc) * 3 + dy) * 3 + dx) * l.in_c + ic];
                    }
                }
            }
        }
}

template <typename T>
void conv_backward(const LayerDef& l, const T* theta, const std::vector<T>& in,
                   const std::vector<T>& dout, std::vector<T>& din, T* grad) {
    const T* W = theta + l.w_off;
    T* dW = grad + l.w_off;
    T* db = grad + l.b_off;
    din.assign(in.size(), T(0));
    for (int y = 0; y < l.out_h; ++y)
        for (int x = 0; x < l.out_w; ++x) {
            const T* go = &dout[(size_t(y) * l.out_w + x) * l.out_c];
            for (int oc = 0; oc < l.out_c; ++oc) db[oc] += go[oc];
            for (int dy = 0; dy < 3; ++dy) {
                int sy = y + dy - 1;
                if (sy < 0 || sy >= l.in_h) continue;
                for (int dx = 0; dx < 3; ++dx) {
                    int sx = x + dx - 1;
                    if (sx < 0 || sx >= l.in_w) continue;
                    const T* iv = &in[(size_t(sy) * l.in_w + sx) * l.in_c];
                    T* dv = &din[(size_t(sy) * l.in_w + sx) * l.in_c];
                    for (int ic = 0; ic < l.in_c; ++ic) {
                        for (int oc = 0; oc < l.out_c; ++oc) {
                            size_t wi = ((size_t(oc) * 3 + dy) * 3 + dx) * l.in_c + ic;
                            dW[wi] += go[oc] * iv[ic];
                            dv[ic] += go[oc] * W[wi];
                        }
                    }
                }
            }
        }
}

// Runs the forward pass; returns softmax probs.
template <typename T>
std::vector<T> forward(const T* theta, const std::vector<LayerDef>& layers,
                       const std::vector<float>& input, ForwardCache<T>* cache) {
    std::vector<T> cur(input.begin(), input.end());
    if (cache) cache->pool_arg.assign(layers.size(), {});
    for (size_t li = 0; li < layers.size(); ++li) {
        const LayerDef& l = layers[li];
        if (cache) cache->acts.push_back(cur);
        std::vector<T> out;
        switch (l.kind) {
            case LayerDef::Conv:
                conv_forward(l, theta, cur, out);
                break;
            case LayerDef::Relu:
                out = cur;
                for (T& v : out) v = v > T(0) ? v : T(0);
                break;
            case LayerDef::Pool: {
                out.assign(size_t(l.out_h) * l.out_w * l.out_c, T(0));
                std::vector<int> arg(out.size(), 0);
                for (int y = 0; y < l.out_h; ++y)
                    for (int x = 0; x < l.out_w; ++x)
                        for (int c = 0; c < l.out_c; ++c) {
                            int best = -1;
                            T bv = T(-1e30);
                            for (int dy = 0; dy < 2; ++dy)
                                for (int dx = 0; dx < 2; ++dx) {
                                    int idx = ((2 * y + dy) * l.in_w + (2 * x + dx)) * l.in_c + c;
                                    if (cur[idx] > bv) { bv = cur[idx]; best = idx; }
                                }
                            size_t oi = (size_t(y) * l.out_w + x) * l.out_c + c;
                            out[oi] = bv;
                            arg[oi] = best;
                        }
                if (cache) cache->pool_arg[li] = std::move(arg);
                break;
            }
            case LayerDef::Dense: {
                const T* W = theta + l.w_off;
                const T* b = theta + l.b_off;
                int in_dim = l.in_c, out_dim = l.out_c;
                out.assign(out_dim, T(0));
                for (int j = 0; j < out_dim; ++j) out[j] = b[j];
                for (int i = 0; i < in_dim; ++i) {
                    T v = cur[i];
                    if (v == T(0)) continue;
                    const T* wrow = &W[size_t(i) * out_dim];
                    for (int j = 0; j < out_dim; ++j) out[j] += v * wrow[j];
                }
                break;
            }
        }
        cur = std::move(out);
    }
    return softmax(cur);
}

// Backprop from dlogits; accumulates into grad (same length as theta).
template <typename T>
void backward(const T* theta, const std::vector<LayerDef>& layers,
              const ForwardCache<T>& cache, std::vector<T> dout, T* grad) {
    for (size_t li = layers.size(); li-- > 0;) {
        const LayerDef& l = layers[li];
        const std::vector<T>& in = cache.acts[li];
        std::vector<T> din;
        switch (l.kind) {
            case LayerDef::Conv:
                conv_backward(l, theta, in, dout, din, grad);
                break;
            case LayerDef::Relu:
                din = dout;
                for (size_t i = 0; i < in.size(); ++i)
                    if (in[i] <= T(0)) din[i] = T(0);
                break;
            case LayerDef::Pool: {
                din.assign(in.size(), T(0));
                const std::vector<int>& arg = cache.pool_arg[li];
                for (size_t oi = 0; oi < dout.size(); ++oi) din[arg[oi]] += dout[oi];
                break;
            }
            case LayerDef::Dense: {
                const T* W = theta + l.w_off;
                T* dW = grad + l.w_off;
                T* db = grad + l.b_off;
                int in_dim = l.in_c, out_dim = l.out_c;
                din.assign(in_dim, T(0));
                for (int j = 0; j < out_dim; ++j) db[j] += dout[j];
                for (int i = 0; i < in_dim; ++i) {
                    T v = in[i];
                    T acc = T(0);
                    const T* wrow = &W[size_t(i) * out_dim];
                    T* dwrow = &dW[size_t(i) * out_dim];
                    for (int j = 0; j < out_dim; ++j) {
                        dwrow[j] += v * dout[j];
                        acc += wrow[j] * dout[j];
                    }
                    din[i] = acc;
                }
                break;
            }
        }
        dout = std::move(din);
    }
}

void check_input(const ModelParams& m, const StandardizedImage& img) {
    if (img.img.height != m.in_h || img.img.width != m.in_w ||
        img.img.channels != m.in_c)
        throw std::invalid_argument("predict: input shape does not match model");
}

}  // namespace

ModelParams init_model(const std::string& arch_id, int n_cls, int in_h, int in_w,
                       int in_c, uint64_t seed) {
    ModelParams m;
    m.arch_id = arch_id;
    m.n_cls = n_cls;
    m.in_h = in_h;
    m.in_w = in_w;
    m.in_c = in_c;
    size_t total = 0;
    auto layers = build_arch(arch_id, n_cls, in_h, in_w, in_c, &total, &m.layout);
    m.theta.assign(total, 0.0f);

    // He-style uniform fan-in init for weights, zero biases.
    std::mt19937_64 rng(seed);
    for (const LayerDef& l : layers) {
        if (l.w_size == 0) continue;
        size_t fan_in = l.kind == LayerDef::Conv ? size_t(3) * 3 * l.in_c : size_t(l.in_c);
        float limit = std::sqrt(6.0f / float(fan_in));
        std::uniform_real_distribution<float> dist(-limit, limit);
        for (size_t i = 0; i < l.w_size; ++i) m.theta[l.w_off + i] = dist(rng);
    }
    return m;
}

PredictionVector predict(const ModelParams& model, const StandardizedImage& img) {
    check_input(model, img);
    auto layers = arch_of(model);
    PredictionVector p;
    std::vector<float> probs =
        forward<float>(model.theta.data(), layers, img.img.data, nullptr);
    p.probs.assign(probs.begin(), probs.end());
    return p;
}

double sample_loss(const ModelParams& model, const StandardizedImage& img, int label,
                   float weight_decay) {
    check_input(model, img);
    auto layers = arch_of(model);
    std::vector<double> theta(model.theta.begin(), model.theta.end());
    std::vector<double> probs = forward<double>(theta.data(), layers, img.img.data, nullptr);
    double loss = -std::log(std::max(probs[label], 1e-300));
    if (weight_decay > 0.0f) {
        double l2 = 0.0;
        for (double v : theta) l2 += v * v;
        loss += 0.5 * double(weight_decay) * l2;
    }
    return loss;
}

std::vector<double> sample_gradient(const ModelParams& model, const StandardizedImage& img,
                                    int label, float weight_decay) {
    check_input(model, img);
    auto layers = arch_of(model);
    std::vector<double> theta(model.theta.begin(), model.theta.end());
    ForwardCache<double> cache;
    std::vector<double> probs = forward<double>(theta.data(), layers, img.img.data, &cache);
    std::vector<double> dlogits = probs;
    dlogits[label] -= 1.0;
    std::vector<double> grad(model.theta.size(), 0.0);
    backward<double>(theta.data(), layers, cache, dlogits, grad.data());
    if (weight_decay > 0.0f)
        for (size_t i = 0; i < grad.size(); ++i) grad[i] += double(weight_decay) * theta[i];
    return grad;
}

ModelParams train_local(const ModelParams& model,
                        const std::vector<StandardizedImage>& inputs,
                        const std::vector<int>& labels, const TrainConfig& cfg,
                        std::vector<float>* velocity) {
    if (inputs.empty() || inputs.size() != labels.size())
        throw std::invalid_argument("train_local: empty or mismatched dataset");
    if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0f ||
        cfg.weight_decay < 0.0f || cfg.momentum < 0.0f || cfg.momentum >= 1.0f)
        throw std::invalid_argument("train_local: bad TrainConfig");

    ModelParams m = model;
    auto layers = arch_of(m);
    std::mt19937_64 rng(cfg.seed);

    std::vector<size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<float> grad(m.theta.size());
    std::vector<float> local_vel;
    std::vector<float>& vel = velocity ? *velocity : local_vel;
    vel.resize(m.theta.size(), 0.0f);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t end = std::min(order.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0f);
            for (size_t k = start; k < end; ++k) {
                const StandardizedImage& x = inputs[order[k]];
                ForwardCache<float> cache;
                std::vector<float> probs =
                    forward<float>(m.theta.data(), layers, x.img.data, &cache);
                std::vector<float> dlogits = probs;
                dlogits[labels[order[k]]] -= 1.0f;
                backward<float>(m.theta.data(), layers, cache, dlogits, grad.data());
            }
            float inv_bs = 1.0f / float(end - start);
            for (size_t i = 0; i < m.theta.size(); ++i) {
                float g = grad[i] * inv_bs + cfg.weight_decay * m.theta[i];
                vel[i] = cfg.momentum * vel[i] + g;
                m.theta[i] -= cfg.learning_rate * vel[i];
            }
        }
    }
    return m;
}

ModelParams average_models(const std::vector<ModelParams>& models) {
    if (models.empty())
        throw std::invalid_argument("average_models: need at least one model");
    ModelParams out = models[0];
    for (size_t k = 1; k < models.size(); ++k) {
        if (!models[k].same_arch(out))
            throw std::invalid_argument("average_models: architecture mismatch");
        for (size_t i = 0; i < out.theta.size(); ++i) out.theta[i] += models[k].theta[i];
    }
    float inv = 1.0f / float(models.size());
    for (float& v : out.theta) v *= inv;
    return out;
}

float accuracy(const ModelParams& model, const std::vector<StandardizedImage>& inputs,
               const std::vector<int>& labels) {
    if (inputs.empty()) return 0.0f;
    size_t hits = 0;
    for (size_t i = 0; i < inputs.size(); ++i)
        if (predict(model, inputs[i]).argmax() == labels[i]) ++hits;
    return float(hits) / float(inputs.size());
}

void save_model(const ModelParams& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_model: cannot open " + path);
    nlohmann::json hdr{{"arch_id", model.arch_id}, {"n_cls", model.n_cls},
                       {"in_h", model.in_h},       {"in_w", model.in_w},
                       {"in_c", model.in_c},       {"theta_len", model.theta.size()}};
    f << hdr.dump() << "\n";
    f.write(reinterpret_cast<const char*>(model.theta.data()),
            model.theta.size() * sizeof(float));
}

ModelParams load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_model: cannot open " + path);
    std::string line;
    std::getline(f, line);
    nlohmann::json hdr = nlohmann::json::parse(line);
    ModelParams m = init_model(hdr.at("arch_id"), hdr.at("n_cls"), hdr.at("in_h"),
                               hdr.at("in_w"), hdr.at("in_c"), 0);
    if (m.theta.size() != hdr.at("theta_len").get<size_t>())
        throw std::runtime_error("load_model: theta length mismatch in " + path);
    f.read(reinterpret_cast<char*>(m.theta.data()), m.theta.size() * sizeof(float));
    if (!f) throw std::runtime_error("load_model: truncated checkpoint " + path);
    return m;
}

}  // namespace augmix
