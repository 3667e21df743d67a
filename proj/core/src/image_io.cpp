// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace relaydiff {

namespace {

constexpr char kLatentMagic[4] = {'R', 'L', 'A', 'T'};
constexpr std::uint32_t kLatentVersion = 1;

void skip_ppm_whitespace(std::istream& in) {
    int c = in.peek();
    while (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') {
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            in.get();
        }
        c = in.peek();
    }
}

int read_ppm_int(std::istream& in) {
    skip_ppm_whitespace(in);
    int v = 0;
    in >> v;
    if (!in) throw std::runtime_error("malformed PPM header");
    return v;
}

}  // namespace

void write_ppm(const std::string& path, const Grid& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw std::invalid_argument("PPM writer expects 1 or 3 channels, got " +
                                    std::to_string(image.channels));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int src = image.channels == 3 ? c : 0;
                const double v = std::clamp(image.at(src, y, x), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

Grid read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    const bool p6 = (m0 == 'P' && m1 == '6');
    const bool p5 = (m0 == 'P' && m1 == '5');
    if (!p6 && !p5) throw std::runtime_error(path + ": not a binary PPM/PGM");
    const int w = read_ppm_int(in);
    const int h = read_ppm_int(in);
    const int maxval = read_ppm_int(in);
    if (maxval != 255) throw std::runtime_error(path + ": only maxval 255 supported");
    in.get();  // single whitespace after header
    const int channels = p6 ? 3 : 1;
    Grid img(channels, h, w);
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * channels);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size()));
        if (!in) throw std::runtime_error(path + ": truncated pixel data");
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) =
                    row[static_cast<std::size_t>(x) * channels + c] / 255.0;
    }
    return img;
}

void write_latent(const std::string& path, const Grid& latent, int factor) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(kLatentMagic, 4);
    const std::uint32_t header[5] = {
        kLatentVersion, static_cast<std::uint32_t>(latent.channels),
        static_cast<std::uint32_t>(latent.height),
        static_cast<std::uint32_t>(latent.width),
        static_cast<std::uint32_t>(factor)};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(latent.data.data()),
              static_cast<std::streamsize>(latent.data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing " + path);
}

LatentFile read_latent(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kLatentMagic, 4) != 0)
        throw std::runtime_error(path + ": not a latent dump");
    std::uint32_t header[5];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] != kLatentVersion)
        throw std::runtime_error(path + ": unsupported latent dump version");
    LatentFile f;
    f.latent = Grid(static_cast<int>(header[1]), static_cast<int>(header[2]),
                    static_cast<int>(header[3]));
    f.factor = static_cast<int>(header[4]);
    in.read(reinterpret_cast<char*>(f.latent.data.data()),
            static_cast<std::streamsize>(f.latent.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated latent payload");
    return f;
}

}  // namespace relaydiff
