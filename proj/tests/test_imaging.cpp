#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "augmix/dataset.hpp"
#include "augmix/image.hpp"
#include "augmix/imageio.hpp"
#include "support.hpp"

using namespace augmix;
namespace fs = std::filesystem;

TEST_CASE("grayscale uses luma weights") {
    Image img(1, 1, 3);
    img.at(0, 0, 0) = 1.0f;  // pure red
    Image g = to_grayscale(img);
    CHECK(g.channels == 1);
    CHECK(g.at(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-3));

    img.at(0, 0, 0) = 0.0f;
    img.at(0, 0, 1) = 1.0f;  // pure green
    CHECK(to_grayscale(img).at(0, 0, 0) == doctest::Approx(0.587).epsilon(1e-3));
}

TEST_CASE("grayscale of grayscale is identity") {
    Image img = testsup::random_image(5, 7, 1, 3);
    Image g = to_grayscale(img);
    CHECK(g.data == img.data);
}

TEST_CASE("bilinear resize: 2x2 checkerboard to 1x1 gives the center value") {
    Image img(2, 2, 1);
    img.at(0, 0, 0) = 1.0f;
    img.at(1, 1, 0) = 1.0f;
    Image out = resize_bilinear(img, 1, 1);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("bilinear resize: 1x2 [0,1] to 1x3 gives [0, 0.5, 1]") {
    Image img(1, 2, 1);
    img.at(0, 1, 0) = 1.0f;
    Image out = resize_bilinear(img, 1, 3);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(out.at(0, 1, 0) == doctest::Approx(0.5));
    CHECK(out.at(0, 2, 0) == doctest::Approx(1.0));
}

TEST_CASE("bilinear resize: identity when shape unchanged") {
    Image img = testsup::random_image(9, 4, 3, 5);
    Image out = resize_bilinear(img, 9, 4);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));
}

TEST_CASE("standardize / unstandardize round-trip") {
    Image img = testsup::random_image(6, 6, 3, 11);
    std::vector<float> means = {0.4f, 0.5f, 0.6f}, stds = {0.2f, 0.25f, 0.3f};
    StandardizedImage s = standardize(img, means, stds);
    Image back = unstandardize(s);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-5));
}

TEST_CASE("pnm round-trip (P5 and P6)") {
    std::string dir = testsup::temp_dir("pnm");
    for (int c : {1, 3}) {
        Image img = testsup::random_image(7, 5, c, 17 + c);
        // snap to 8-bit grid so the round-trip is exact
        for (auto& v : img.data) v = std::round(v * 255.0f) / 255.0f;
        std::string path = dir + "/rt" + std::to_string(c) + (c == 1 ? ".pgm" : ".ppm");
        write_pnm(img, path);
        Image back = read_pnm(path);
        REQUIRE(back.same_shape(img));
        for (size_t i = 0; i < img.data.size(); ++i)
            CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("idx round-trip") {
    std::string dir = testsup::temp_dir("idx");
    LabeledDataset ds = testsup::make_synthetic(3, 4, 8, 8, 21, 0.1f, "train");
    write_idx(ds, dir + "/im.idx", dir + "/lb.idx");
    LabeledDataset back = load_idx(dir + "/im.idx", dir + "/lb.idx");
    REQUIRE(back.size() == ds.size());
    CHECK(back.n_cls == 4);
    CHECK(back.labels == ds.labels);
    for (size_t i = 0; i < ds.size(); ++i)
        for (size_t j = 0; j < ds.images[i].data.size(); ++j)
            CHECK(back.images[i].data[j] ==
                  doctest::Approx(ds.images[i].data[j]).epsilon(1e-6));
}

TEST_CASE("idx ingestion: label beyond the pinned class count is an error") {
    std::string dir = testsup::temp_dir("idxbad");
    LabeledDataset ds = testsup::make_synthetic(2, 5, 4, 4, 3, 0.0f, "train");
    write_idx(ds, dir + "/im.idx", dir + "/lb.idx");
    CHECK_THROWS(load_idx(dir + "/im.idx", dir + "/lb.idx", 3));
    CHECK_NOTHROW(load_idx(dir + "/im.idx", dir + "/lb.idx", 5));
}

TEST_CASE("idx ingestion: truncated file error names the file") {
    std::string dir = testsup::temp_dir("idxtrunc");
    std::ofstream(dir + "/short.idx", std::ios::binary) << "\x00\x00\x08";
    try {
        load_idx(dir + "/short.idx", dir + "/short.idx");
        FAIL("expected an ingestion error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("short.idx") != std::string::npos);
    }
}

TEST_CASE("image-dir ingestion is deterministic and lexicographic") {
    std::string dir = testsup::temp_dir("imgdir");
    fs::remove_all(dir);
    for (std::string cls : {"b_class", "a_class"}) {
        fs::create_directories(fs::path(dir) / cls);
        for (int k = 0; k < 2; ++k) {
            Image img = testsup::random_image(6, 6, 3, k + (cls[0] == 'a' ? 10 : 20));
            for (auto& v : img.data) v = std::round(v * 255.0f) / 255.0f;
            write_pnm(img, (fs::path(dir) / cls / ("s" + std::to_string(k) + ".ppm")).string());
        }
    }
    LabeledDataset ds1 = load_image_dir(dir);
    LabeledDataset ds2 = load_image_dir(dir);
    REQUIRE(ds1.size() == 4);
    CHECK(ds1.n_cls == 2);
    // a_class sorts first -> label 0
    CHECK(ds1.labels == std::vector<int>{0, 0, 1, 1});
    for (size_t i = 0; i < ds1.size(); ++i) CHECK(ds1.images[i].data == ds2.images[i].data);
}

TEST_CASE("iid partition: per-class sizes differ by at most one, covers everything") {
    LabeledDataset ds = testsup::make_synthetic(11, 3, 4, 4, 9, 0.2f, "train");
    auto parts = partition_iid(ds, 4, 77);
    REQUIRE(parts.size() == 4);
    size_t total = 0;
    for (const auto& p : parts) total += p.size();
    CHECK(total == ds.size());
    for (int c = 0; c < 3; ++c) {
        std::vector<size_t> counts;
        for (const auto& p : parts) {
            size_t n = 0;
            for (int l : p.labels) n += (l == c);
            counts.push_back(n);
        }
        auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
        CHECK(*mx - *mn <= 1);
    }
}

TEST_CASE("iid partition is seed-deterministic") {
    LabeledDataset ds = testsup::make_synthetic(8, 2, 4, 4, 13, 0.2f, "train");
    auto a = partition_iid(ds, 3, 5);
    auto b = partition_iid(ds, 3, 5);
    auto c = partition_iid(ds, 3, 6);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].labels == b[i].labels);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[i].size(); ++j)
            if (a[i].images[j].data != c[i].images[j].data) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("channel stats match a hand computation") {
    LabeledDataset ds;
    ds.n_cls = 1;
    Image a(1, 2, 1);
    a.at(0, 0, 0) = 0.0f;
    a.at(0, 1, 0) = 1.0f;
    ds.images.push_back(a);
    ds.labels.push_back(0);
    std::vector<float> m, s;
    channel_stats(ds, &m, &s);
    REQUIRE(m.size() == 1);
    CHECK(m[0] == doctest::Approx(0.5));
    CHECK(s[0] == doctest::Approx(0.5));
}

TEST_CASE("derive_seed separates stages and is stable") {
    CHECK(derive_seed(1, "train") == derive_seed(1, "train"));
    CHECK(derive_seed(1, "train") != derive_seed(1, "partition"));
    CHECK(derive_seed(1, "train") != derive_seed(2, "train"));
}
