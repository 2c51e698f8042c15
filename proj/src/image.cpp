#include "amd/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "amd/errors.hpp"

namespace amd {

Image Image::filled(int w, int h, float r, float g, float b) {
    Image img;
    img.width = w;
    img.height = h;
    img.data.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < img.data.size(); i += 3) {
        img.data[i] = r;
        img.data[i + 1] = g;
        img.data[i + 2] = b;
    }
    return img;
}

namespace {

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string next_token(const std::vector<uint8_t>& bytes, size_t& pos) {
    while (pos < bytes.size()) {
        char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#') {
        tok += static_cast<char>(bytes[pos++]);
    }
    return tok;
}

int parse_header_int(const std::vector<uint8_t>& bytes, size_t& pos, const char* what) {
    std::string tok = next_token(bytes, pos);
    if (tok.empty()) throw DataError(std::string("ppm: truncated header, missing ") + what);
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw DataError(std::string("ppm: bad ") + what + " '" + tok + "'");
    return std::stoi(tok);
}

uint8_t to_byte(float v) {
    float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(c * 255.0f + 0.5f);
}

}  // namespace

Image decode_image(const std::vector<uint8_t>& bytes, ImageFormat format) {
    if (format == ImageFormat::Png)
        throw DataError("png: support not compiled in; use PPM (P6)");

    size_t pos = 0;
    std::string magic = next_token(bytes, pos);
    if (magic != "P6") throw DataError("ppm: expected magic P6, got '" + magic + "'");

    int w = parse_header_int(bytes, pos, "width");
    int h = parse_header_int(bytes, pos, "height");
    int maxval = parse_header_int(bytes, pos, "maxval");
    if (w < 1 || h < 1) throw DataError("ppm: non-positive dimensions");
    if (maxval < 1 || maxval > 255) throw DataError("ppm: unsupported maxval " + std::to_string(maxval));
    if (pos >= bytes.size()) throw DataError("ppm: truncated header");
    ++pos;  // single whitespace byte after maxval

    size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - pos < need)
        throw DataError("ppm: pixel data truncated (" + std::to_string(bytes.size() - pos) +
                        " of " + std::to_string(need) + " bytes)");

    Image img;
    img.width = w;
    img.height = h;
    img.data.resize(need);
    float scale = 1.0f / static_cast<float>(maxval);
    for (size_t i = 0; i < need; ++i) img.data[i] = static_cast<float>(bytes[pos + i]) * scale;
    return img;
}

std::vector<uint8_t> encode_ppm(const Image& img) {
    std::string header =
        "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.data.size());
    for (float v : img.data) out.push_back(to_byte(v));
    return out;
}

Image read_image_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    ImageFormat fmt = path.extension() == ".png" ? ImageFormat::Png : ImageFormat::Ppm;
    try {
        return decode_image(bytes, fmt);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

namespace {

void write_bytes(const std::filesystem::path& path, const void* data, size_t n) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

void write_ppm_file(const std::filesystem::path& path, const Image& img) {
    auto bytes = encode_ppm(img);
    write_bytes(path, bytes.data(), bytes.size());
}

void write_pgm_file(const std::filesystem::path& path, const std::vector<float>& gray,
                    int width, int height) {
    if (static_cast<size_t>(width) * height != gray.size())
        throw DataError("pgm: size mismatch");
    std::string header =
        "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + gray.size());
    for (float v : gray) out.push_back(to_byte(v));
    write_bytes(path, out.data(), out.size());
}

Image crop_square(const Image& img) {
    int side = std::min(img.width, img.height);
    int x0 = (img.width - side) / 2;
    int y0 = (img.height - side) / 2;
    if (x0 == 0 && y0 == 0 && img.width == img.height) return img;

    Image out;
    out.width = side;
    out.height = side;
    out.data.resize(static_cast<size_t>(side) * side * 3);
    for (int y = 0; y < side; ++y) {
        const float* src = &img.data[(static_cast<size_t>(y + y0) * img.width + x0) * 3];
        float* dst = &out.data[static_cast<size_t>(y) * side * 3];
        std::copy(src, src + static_cast<size_t>(side) * 3, dst);
    }
    return out;
}

Image resize_bilinear(const Image& img, int side) {
    if (img.width != img.height) throw DataError("resize_bilinear: input must be square");
    if (side < 1) throw DataError("resize_bilinear: side must be >= 1");
    int in = img.width;
    if (in == side) return img;

    Image out;
    out.width = side;
    out.height = side;
    out.data.resize(static_cast<size_t>(side) * side * 3);

    double ratio = static_cast<double>(in) / side;
    for (int oy = 0; oy < side; ++oy) {
        double sy = (oy + 0.5) * ratio - 0.5;
        int y0 = static_cast<int>(std::floor(sy));
        double fy = sy - y0;
        int y0c = std::clamp(y0, 0, in - 1);
        int y1c = std::clamp(y0 + 1, 0, in - 1);
        for (int ox = 0; ox < side; ++ox) {
            double sx = (ox + 0.5) * ratio - 0.5;
            int x0 = static_cast<int>(std::floor(sx));
            double fx = sx - x0;
            int x0c = std::clamp(x0, 0, in - 1);
            int x1c = std::clamp(x0 + 1, 0, in - 1);
            for (int c = 0; c < 3; ++c) {
                double top = img.at(x0c, y0c, c) * (1.0 - fx) + img.at(x1c, y0c, c) * fx;
                double bot = img.at(x0c, y1c, c) * (1.0 - fx) + img.at(x1c, y1c, c) * fx;
                out.at(ox, oy, c) = static_cast<float>(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    return out;
}

}  // namespace amd
