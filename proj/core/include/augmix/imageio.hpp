#pragma once

#include <string>

#include "augmix/image.hpp"

namespace augmix {

/// Binary PPM (P6) for 3-channel images, PGM (P5) for 1-channel.
void write_pnm(const Image& img, const std::string& path);
Image read_pnm(const std::string& path);

Image read_png(const std::string& path);

/// Dispatches on extension (.png, .ppm, .pgm).
Image read_image_file(const std::string& path);

}  // namespace augmix
