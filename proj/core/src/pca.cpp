#include "augmix/pca.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "augmix/imageio.hpp"

namespace augmix {

ClassMatrix build_class_matrix(const std::vector<Image>& images, int class_id) {
    if (images.size() < 2)
        throw std::invalid_argument("build_class_matrix: need at least 2 images");
    const Image& first = images[0];
    for (const Image& img : images)
        if (!img.same_shape(first))
            throw std::invalid_argument("build_class_matrix: shape mismatch");

    ClassMatrix X;
    X.n = images.size();
    X.d = first.size();
    X.class_id = class_id;
    X.height = first.height;
    X.width = first.width;
    X.channels = first.channels;
    X.rows.reserve(X.n * X.d);
    for (const Image& img : images)
        X.rows.insert(X.rows.end(), img.data.begin(), img.data.end());
    return X;
}

std::vector<double> first_principal_component(const ClassMatrix& X) {
    const size_t n = X.n, d = X.d;

    std::vector<double> mean(d, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) mean[j] += X.rows[i * d + j];
    for (double& m : mean) m /= double(n);

    std::vector<double> centered(n * d);
    double total_var = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) {
            double v = X.rows[i * d + j] - mean[j];
            centered[i * d + j] = v;
            total_var += v * v;
        }
    if (total_var < 1e-24)
        throw std::runtime_error("first_principal_component: degenerate data (all rows identical)");

    // Power iteration on the centered Gram structure: v <- Xc^T (Xc v),
    // never forming the d x d covariance. Fixed all-ones start vector.
    std::vector<double> v(d, 1.0 / std::sqrt(double(d)));
    std::vector<double> proj(n), next(d);
    double prev_eig = 0.0;
    for (int it = 0; it < 1000; ++it) {
        for (size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = &centered[i * d];
            for (size_t j = 0; j < d; ++j) acc += row[j] * v[j];
            proj[i] = acc;
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double* row = &centered[i * d];
            double p = proj[i];
            for (size_t j = 0; j < d; ++j) next[j] += row[j] * p;
        }
        double norm = 0.0;
        for (double x : next) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;  // start vector orthogonal to the data span
        double eig = norm;       // Rayleigh quotient since |v| = 1
        for (size_t j = 0; j < d; ++j) v[j] = next[j] / norm;
        if (it > 0 && std::abs(eig - prev_eig) < 1e-10 * std::max(1.0, std::abs(eig)))
            break;
        prev_eig = eig;
    }

    size_t arg = 0;
    for (size_t j = 1; j < d; ++j)
        if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    if (v[arg] < 0.0)
        for (double& x : v) x = -x;
    return v;
}

Image reconstruct_class_image(const ClassMatrix& X, bool scalar_stats) {
    std::vector<double> v1 = first_principal_component(X);
    const size_t n = X.n, d = X.d;

    std::vector<double> mu(d, 0.0), sigma(d, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) mu[j] += X.rows[i * d + j];
    for (double& m : mu) m /= double(n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) {
            double delta = X.rows[i * d + j] - mu[j];
            sigma[j] += delta * delta;
        }
    for (double& s : sigma) s = std::sqrt(s / double(n));  // population std

    if (scalar_stats) {
        double mu_all = 0.0, var_all = 0.0;
        for (double m : mu) mu_all += m;
        mu_all /= double(d);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) {
                double delta = X.rows[i * d + j] - mu_all;
                var_all += delta * delta;
            }
        var_all /= double(n * d);
        std::fill(mu.begin(), mu.end(), mu_all);
        std::fill(sigma.begin(), sigma.end(), std::sqrt(var_all));
    }

    Image out(X.height, X.width, X.channels);
    for (size_t j = 0; j < d; ++j)
        out.data[j] = clamp01(float(v1[j] * sigma[j] + mu[j]));
    return out;
}

PcaGallery build_gallery(const std::vector<Image>& images,
                         const std::vector<int>& labels, int n_cls,
                         bool scalar_stats) {
    if (images.size() != labels.size())
        throw std::invalid_argument("build_gallery: images/labels length mismatch");
    PcaGallery g;
    g.n_cls = n_cls;
    g.images.resize(n_cls);
    for (int c = 0; c < n_cls; ++c) {
        std::vector<Image> cls;
        for (size_t i = 0; i < images.size(); ++i)
            if (labels[i] == c) cls.push_back(images[i]);
        if (cls.size() < 2)
            throw std::invalid_argument("build_gallery: class " + std::to_string(c) +
                                        " has fewer than 2 samples");
        g.images[c] = reconstruct_class_image(build_class_matrix(cls, c), scalar_stats);
    }
    return g;
}

int derive_pca_key(PHash64 h, int n_cls) {
    if (n_cls < 1) throw std::invalid_argument("derive_pca_key: n_cls must be >= 1");
    return static_cast<int>(h.decimal() % uint64_t(n_cls));
}

Image fuse(const Image& aug, const Image& pca, FusionWeight w) {
    w.validate();
    if (!aug.same_shape(pca))
        throw std::invalid_argument("fuse: shape mismatch");
    Image out = aug;
    float a = float(w.alpha);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a * aug.data[i] + (1.0f - a) * pca.data[i];
    return out;
}

void save_gallery(const PcaGallery& g, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["n_cls"] = g.n_cls;
    for (int c = 0; c < g.n_cls; ++c) {
        std::string name = "class_" + std::to_string(c) +
                           (g.images[c].channels == 3 ? ".ppm" : ".pgm");
        write_pnm(g.images[c], (fs::path(dir) / name).string());
        manifest["classes"][std::to_string(c)] = name;
    }
    std::ofstream((fs::path(dir) / "manifest.json").string()) << manifest.dump(2) << "\n";
}

PcaGallery load_gallery(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream f((fs::path(dir) / "manifest.json").string());
    if (!f) throw std::runtime_error("load_gallery: missing manifest in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(f);
    PcaGallery g;
    g.n_cls = manifest.at("n_cls").get<int>();
    g.images.resize(g.n_cls);
    for (int c = 0; c < g.n_cls; ++c) {
        std::string name = manifest.at("classes").at(std::to_string(c)).get<std::string>();
        g.images[c] = read_pnm((fs::path(dir) / name).string());
    }
    return g;
}

}  // namespace augmix
