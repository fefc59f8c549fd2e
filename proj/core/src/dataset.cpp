#include "augmix/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "augmix/imageio.hpp"

namespace augmix {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void ingest_error(const std::string& path, const std::string& what) {
    throw std::runtime_error("ingest error [" + path + "]: " + what);
}

uint32_t read_be32(std::istream& f, const std::string& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) ingest_error(path, "truncated header");
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | b[3];
}

void write_be32(std::ostream& f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<char*>(b), 4);
}

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        int expected_n_cls) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) ingest_error(images_path, "cannot open");
    if (read_be32(fi, images_path) != kIdxImagesMagic)
        ingest_error(images_path, "bad magic (expected idx3-ubyte)");
    uint32_t count = read_be32(fi, images_path);
    uint32_t rows = read_be32(fi, images_path);
    uint32_t cols = read_be32(fi, images_path);

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) ingest_error(labels_path, "cannot open");
    if (read_be32(fl, labels_path) != kIdxLabelsMagic)
        ingest_error(labels_path, "bad magic (expected idx1-ubyte)");
    if (read_be32(fl, labels_path) != count)
        ingest_error(labels_path, "label count does not match image count");

    LabeledDataset ds;
    ds.images.reserve(count);
    ds.labels.reserve(count);
    std::vector<unsigned char> buf(size_t(rows) * cols);
    int max_label = -1;
    for (uint32_t i = 0; i < count; ++i) {
        fi.read(reinterpret_cast<char*>(buf.data()), buf.size());
        if (!fi) ingest_error(images_path, "truncated at image " + std::to_string(i));
        Image img(int(rows), int(cols), 1);
        for (size_t j = 0; j < buf.size(); ++j) img.data[j] = buf[j] / 255.0f;
        ds.images.push_back(std::move(img));
        int lbl = fl.get();
        if (lbl == EOF) ingest_error(labels_path, "truncated at label " + std::to_string(i));
        if (expected_n_cls > 0 && lbl >= expected_n_cls)
            ingest_error(labels_path, "label " + std::to_string(lbl) +
                                          " >= n_cls at record " + std::to_string(i));
        ds.labels.push_back(lbl);
        max_label = std::max(max_label, lbl);
    }
    ds.n_cls = expected_n_cls > 0 ? expected_n_cls : max_label + 1;
    return ds;
}

void write_idx(const LabeledDataset& ds, const std::string& images_path,
               const std::string& labels_path) {
    if (ds.images.empty()) throw std::invalid_argument("write_idx: empty dataset");
    const Image& first = ds.images[0];
    if (first.channels != 1)
        throw std::invalid_argument("write_idx: idx3-ubyte holds single-channel images");

    std::ofstream fi(images_path, std::ios::binary);
    write_be32(fi, kIdxImagesMagic);
    write_be32(fi, uint32_t(ds.images.size()));
    write_be32(fi, uint32_t(first.height));
    write_be32(fi, uint32_t(first.width));
    for (const Image& img : ds.images)
        for (float v : img.data)
            fi.put(static_cast<char>(std::lround(clamp01(v) * 255.0f)));

    std::ofstream fl(labels_path, std::ios::binary);
    write_be32(fl, kIdxLabelsMagic);
    write_be32(fl, uint32_t(ds.labels.size()));
    for (int l : ds.labels) fl.put(static_cast<char>(l));
}

LabeledDataset load_image_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) ingest_error(dir, "not a directory");
    std::vector<std::string> class_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) ingest_error(dir, "no class subdirectories");

    LabeledDataset ds;
    ds.n_cls = static_cast<int>(class_dirs.size());
    for (int c = 0; c < ds.n_cls; ++c) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(fs::path(dir) / class_dirs[c]))
            if (e.is_regular_file()) files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) {
            ds.images.push_back(read_image_file(f));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

LabeledDataset load_dataset(const std::string& path_or_images, const std::string& format,
                            const std::string& labels_path, int expected_n_cls) {
    if (format == "idx") return load_idx(path_or_images, labels_path, expected_n_cls);
    if (format == "image-dir") return load_image_dir(path_or_images);
    throw std::invalid_argument("load_dataset: unknown format " + format);
}

std::vector<LabeledDataset> partition_iid(const LabeledDataset& ds, int n,
                                          uint64_t seed) {
    if (n < 1) throw std::invalid_argument("partition_iid: n must be >= 1");
    std::vector<LabeledDataset> parts(n);
    for (auto& p : parts) {
        p.n_cls = ds.n_cls;
        p.split = ds.split;
    }
    std::mt19937_64 rng(seed);
    for (int c = 0; c < ds.n_cls; ++c) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == c) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t k = 0; k < idx.size(); ++k) {
            LabeledDataset& p = parts[k % n];
            p.images.push_back(ds.images[idx[k]]);
            p.labels.push_back(c);
        }
    }
    return parts;
}

void channel_stats(const LabeledDataset& ds, std::vector<float>* means,
                   std::vector<float>* stds) {
    if (ds.images.empty()) throw std::invalid_argument("channel_stats: empty dataset");
    int ch = ds.images[0].channels;
    std::vector<double> sum(ch, 0.0), sq(ch, 0.0);
    size_t count = 0;
    for (const Image& img : ds.images) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < ch; ++c) {
                    double v = img.at(y, x, c);
                    sum[c] += v;
                    sq[c] += v * v;
                }
        count += size_t(img.height) * img.width;
    }
    means->resize(ch);
    stds->resize(ch);
    for (int c = 0; c < ch; ++c) {
        double m = sum[c] / double(count);
        double var = sq[c] / double(count) - m * m;
        (*means)[c] = float(m);
        (*stds)[c] = float(std::max(std::sqrt(std::max(var, 0.0)), 1e-6));
    }
}

uint64_t derive_seed(uint64_t master_seed, const std::string& stage) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
    auto mix = [&](unsigned char b) {
        h ^= b;
        h *= 1099511628211ull;
    };
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(master_seed >> (8 * i)));
    for (char c : stage) mix(static_cast<unsigned char>(c));
    return h;
}

}  // namespace augmix
