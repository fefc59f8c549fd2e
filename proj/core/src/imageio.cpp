#include "augmix/imageio.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace augmix {

namespace {

[[noreturn]] void ingest_error(const std::string& path, const std::string& what) {
    throw std::runtime_error("ingest error [" + path + "]: " + what);
}

}  // namespace

void write_pnm(const Image& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) ingest_error(path, "cannot open for writing");
    f << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
    for (float v : img.data)
        f.put(static_cast<char>(std::lround(clamp01(v) * 255.0f)));
}

Image read_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) ingest_error(path, "cannot open");
    std::string magic;
    int w, h, maxv;
    f >> magic >> w >> h >> maxv;
    if ((magic != "P5" && magic != "P6") || w <= 0 || h <= 0 || maxv != 255)
        ingest_error(path, "unsupported PNM header");
    f.get();  // single whitespace after header
    int channels = magic == "P6" ? 3 : 1;
    Image img(h, w, channels);
    std::vector<unsigned char> buf(img.size());
    f.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (static_cast<size_t>(f.gcount()) != buf.size())
        ingest_error(path, "truncated pixel data");
    for (size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0f;
    return img;
}

Image read_png(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!fp) ingest_error(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) ingest_error(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        ingest_error(path, "libpng decode failed");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels == 2) channels = 1;  // gray+alpha stripped above
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        ingest_error(path, "unsupported channel count");
    }

    std::vector<unsigned char> row(png_get_rowbytes(png, info));
    Image img(int(h), int(w), channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w * channels; ++x)
            img.data[static_cast<size_t>(y) * w * channels + x] = row[x] / 255.0f;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image read_image_file(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".png") return read_png(path);
    if (ext == ".ppm" || ext == ".pgm") return read_pnm(path);
    ingest_error(path, "unsupported image extension");
}

}  // namespace augmix
