#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace amd {

// Interleaved RGB raster with intensities in [0, 1], row-major.
struct Image {
    int width = 0;
    int height = 0;
    static constexpr int channels = 3;
    std::vector<float> data;  // width * height * 3

    static Image filled(int w, int h, float r, float g, float b);

    float& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
};

enum class ImageFormat { Ppm, Png };

// PPM P6 (maxval <= 255). PNG is not compiled in; requesting it reports so.
Image decode_image(const std::vector<uint8_t>& bytes, ImageFormat format);
std::vector<uint8_t> encode_ppm(const Image& img);

Image read_image_file(const std::filesystem::path& path);
void write_ppm_file(const std::filesystem::path& path, const Image& img);

// Single-channel P5 writer for saliency maps; values clamped to [0, 1].
void write_pgm_file(const std::filesystem::path& path, const std::vector<float>& gray,
                    int width, int height);

// Centered square crop with side min(width, height); offsets floor((dim - side) / 2).
Image crop_square(const Image& img);

// Bilinear resize of a square image with half-pixel-centered sampling.
Image resize_bilinear(const Image& img, int side);

}  // namespace amd
