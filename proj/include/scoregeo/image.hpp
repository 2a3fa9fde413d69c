#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scoregeo/common.hpp"

namespace scoregeo {

// Row-major 8-bit grayscale image.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;
};

// Minimal PNG encoder (8-bit grayscale, stored deflate blocks). Output is
// byte-deterministic for identical input.
std::vector<uint8_t> encode_png_gray(const GrayImage& image);
void write_png_gray(const std::string& path, const GrayImage& image);

// PGM reader (P2 and P5, maxval <= 255); values scaled to [0, 1].
Vec read_pgm(const std::string& path, int& width, int& height);

// Lays out samples of a declared H x W shape as one horizontal strip,
// mapping values through the [vmin, vmax] window.
GrayImage sample_strip(const Mat& rows, int img_h, int img_w, double vmin, double vmax);

} // namespace scoregeo
