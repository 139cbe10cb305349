#include "sstd/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace sstd {
namespace {

std::uint8_t to_u8(float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0f), 0L, 255L));
}

// reads one whitespace-delimited token, skipping '#' comment lines
std::string next_token(std::istream& in) {
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        return tok;
    }
    return {};
}

void read_header(std::istream& in, const std::string& path, const char* magic, int& w, int& h) {
    const std::string m = next_token(in);
    if (m != magic) fail_io("'" + path + "': bad magic '" + m + "', expected " + magic, 0);
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        const int maxval = std::stoi(next_token(in));
        if (maxval != 255) fail_io("'" + path + "': unsupported maxval " + std::to_string(maxval));
    } catch (const std::exception&) {
        fail_io("'" + path + "': malformed header");
    }
    in.get(); // single whitespace before raster
}

} // namespace

void write_ppm(const Tensor& image, const std::string& path) {
    require(image.n == 1 && image.c == 3, "write_ppm: image must be (1,3,h,w), got " +
                                              image.shape_str());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write '" + path + "'");
    out << "P6\n" << image.w << " " << image.h << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(image.w) * 3);
    for (int y = 0; y < image.h; ++y) {
        for (int x = 0; x < image.w; ++x)
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = to_u8(image.at(0, c, y, x));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) fail_io("short write to '" + path + "'");
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open '" + path + "'");
    int w = 0, h = 0;
    read_header(in, path, "P6", w, h);
    require(w >= 1 && h >= 1, "read_ppm: bad dimensions in '" + path + "'");
    Tensor img(1, 3, h, w);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) fail_io("'" + path + "': truncated raster", in.gcount());
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(0, c, y, x) = static_cast<float>(row[x * 3 + c]) / 255.0f;
    }
    return img;
}

void write_pgm(const BinaryMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write '" + path + "'");
    out << "P5\n" << mask.w << " " << mask.h << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(mask.w));
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) row[x] = mask.at(y, x) ? 255 : 0;
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) fail_io("short write to '" + path + "'");
}

BinaryMask read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open '" + path + "'");
    int w = 0, h = 0;
    read_header(in, path, "P5", w, h);
    require(w >= 1 && h >= 1, "read_pgm: bad dimensions in '" + path + "'");
    BinaryMask mask(h, w);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) fail_io("'" + path + "': truncated raster", in.gcount());
        for (int x = 0; x < w; ++x) mask.at(y, x) = row[x] >= 128 ? 1 : 0;
    }
    return mask;
}

void write_pgm_gray(const Tensor& gray, const std::string& path) {
    require(gray.n == 1 && gray.c == 1, "write_pgm_gray: tensor must be (1,1,h,w)");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write '" + path + "'");
    out << "P5\n" << gray.w << " " << gray.h << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(gray.w));
    for (int y = 0; y < gray.h; ++y) {
        for (int x = 0; x < gray.w; ++x) row[x] = to_u8(gray.at(0, 0, y, x));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

} // namespace sstd
