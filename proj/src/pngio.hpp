#ifndef EKMID_PNGIO_HPP
#define EKMID_PNGIO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "errors.hpp"

namespace ekmid::pngio {

struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> pixels;  // row-major, 3 bytes per pixel
};

void write_rgb8(const std::filesystem::path& path, const RgbImage& img);

// Reads any 8-bit PNG, expanding palette/gray/alpha to plain RGB.
RgbImage read_rgb8(const std::filesystem::path& path);

}  // namespace ekmid::pngio

#endif
