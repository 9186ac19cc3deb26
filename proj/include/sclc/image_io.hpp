#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclc/tensor.hpp"

namespace sclc {

namespace detail {

// Netpbm header tokenizer: whitespace-separated tokens, '#' comments to EOL.
struct PnmHeader {
    std::string buf;
    std::size_t pos = 0;
    const std::string& path;

    explicit PnmHeader(const std::string& bytes, const std::string& p) : buf(bytes), path(p) {}

    std::string token() {
        while (pos < buf.size()) {
            const char c = buf[pos];
            if (c == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        if (start == pos)
            throw std::runtime_error("image '" + path + "': truncated header");
        return buf.substr(start, pos - start);
    }

    std::size_t number(const char* what) {
        const std::string t = token();
        for (char c : t)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw std::runtime_error("image '" + path + "': malformed " + what + " '" + t +
                                         "'");
        return static_cast<std::size_t>(std::stoull(t));
    }
};

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("image '" + path + "': cannot open");
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline std::uint8_t quantize(double v) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

}  // namespace detail

/// Read a binary PPM (P6, maxval 255) into a [3,H,W] tensor scaled to [0,1].
inline Tensor read_ppm(const std::string& path) {
    const std::string bytes = detail::read_file(path);
    detail::PnmHeader h(bytes, path);
    if (h.token() != "P6")
        throw std::runtime_error("image '" + path + "': not a binary PPM (P6)");
    const std::size_t w = h.number("width");
    const std::size_t hgt = h.number("height");
    const std::size_t maxval = h.number("maxval");
    if (w == 0 || hgt == 0)
        throw std::runtime_error("image '" + path + "': zero dimensions");
    if (maxval != 255)
        throw std::runtime_error("image '" + path + "': unsupported maxval " +
                                 std::to_string(maxval) + " (expected 255)");
    // exactly one whitespace byte separates the header from pixel data
    if (h.pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[h.pos])))
        throw std::runtime_error("image '" + path + "': malformed header terminator");
    const std::size_t start = h.pos + 1;
    const std::size_t need = w * hgt * 3;
    if (bytes.size() - start < need)
        throw std::runtime_error("image '" + path + "': truncated pixel data");
    if (bytes.size() - start > need)
        throw std::runtime_error("image '" + path + "': trailing bytes after pixel data");

    Tensor img({3, hgt, w});
    const unsigned char* px = reinterpret_cast<const unsigned char*>(bytes.data()) + start;
    for (std::size_t y = 0; y < hgt; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                img.at(c, y, x) = static_cast<double>(px[(y * w + x) * 3 + c]) / 255.0;
    return img;
}

/// Write a [3,H,W] tensor as binary PPM; values clamped to [0,1], rounded to 8 bits.
inline void write_ppm(const Tensor& img, const std::string& path) {
    require_rank(img, 3, "write_ppm: image");
    if (img.dim(0) != 3) throw std::invalid_argument("write_ppm: expects 3 channels");
    const std::size_t h = img.dim(1), w = img.dim(2);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("image '" + path + "': cannot open for writing");
    f << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(w * 3);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                row[x * 3 + c] = detail::quantize(img.at(c, y, x));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw std::runtime_error("image '" + path + "': write failed");
}

/// Write a [H,W] tensor as binary PGM (P5, maxval 255).
inline void write_pgm(const Tensor& map, const std::string& path) {
    require_rank(map, 2, "write_pgm: map");
    const std::size_t h = map.dim(0), w = map.dim(1);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("image '" + path + "': cannot open for writing");
    f << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) row[x] = detail::quantize(map.at(y, x));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw std::runtime_error("image '" + path + "': write failed");
}

}  // namespace sclc
