#include "vad/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace vad {

float Image::at_clamped(int y, int x) const {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return at(y, x);
}

Image bilinear_resize(const Image& src, int out_h, int out_w) {
    if (src.h <= 0 || src.w <= 0) throw std::invalid_argument("bilinear_resize: empty image");
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("bilinear_resize: bad target size");
    Image out(out_h, out_w);
    const float sy = static_cast<float>(src.h) / static_cast<float>(out_h);
    const float sx = static_cast<float>(src.w) / static_cast<float>(out_w);
    for (int y = 0; y < out_h; ++y) {
        float fy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
        fy = std::clamp(fy, 0.0f, static_cast<float>(src.h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.h - 1);
        const float wy = fy - static_cast<float>(y0);
        for (int x = 0; x < out_w; ++x) {
            float fx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
            fx = std::clamp(fx, 0.0f, static_cast<float>(src.w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.w - 1);
            const float wx = fx - static_cast<float>(x0);
            const float top = src.at(y0, x0) * (1.0f - wx) + src.at(y0, x1) * wx;
            const float bot = src.at(y1, x0) * (1.0f - wx) + src.at(y1, x1) * wx;
            out.at(y, x) = top * (1.0f - wy) + bot * wy;
        }
    }
    return out;
}

Image resize_grayscale(const Image& src) { return bilinear_resize(src, 32, 32); }

Image gamma_correct(const Image& src, float gamma) {
    if (!(gamma > 0.0f)) throw std::invalid_argument("gamma_correct: gamma must be > 0");
    Image out(src.h, src.w);
    for (std::size_t i = 0; i < src.v.size(); ++i)
        out.v[i] = std::clamp(std::pow(src.v[i], gamma), 0.0f, 1.0f);
    return out;
}

Image center_crop_rows(const Image& src, int target_h) {
    if (src.h < target_h)
        throw std::invalid_argument("center_crop_rows: input height " + std::to_string(src.h) +
                                    " below target " + std::to_string(target_h));
    const int top = (src.h - target_h) / 2;
    Image out(target_h, src.w);
    for (int y = 0; y < target_h; ++y)
        for (int x = 0; x < src.w; ++x) out.at(y, x) = src.at(top + y, x);
    return out;
}

Image hflip(const Image& src) {
    Image out(src.h, src.w);
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x) out.at(y, x) = src.at(y, src.w - 1 - x);
    return out;
}

void write_pgm(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
    f << "P5\n" << img.w << " " << img.h << "\n255\n";
    std::vector<std::uint8_t> buf(img.v.size());
    for (std::size_t i = 0; i < img.v.size(); ++i) {
        const float s = std::clamp(img.v[i], 0.0f, 1.0f) * 255.0f;
        buf[i] = static_cast<std::uint8_t>(std::lround(s));
    }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write_pgm: short write to " + path);
}

namespace {
int pgm_next_int(std::istream& in) {
    // Skips whitespace and '#' comment lines.
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(in >> value)) throw std::runtime_error("read_pgm: malformed header");
    return value;
}
}  // namespace

Image read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_pgm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw std::runtime_error("read_pgm: " + path + " is not binary PGM (P5)");
    const int w = pgm_next_int(f);
    const int h = pgm_next_int(f);
    const int maxval = pgm_next_int(f);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw std::runtime_error("read_pgm: unsupported header in " + path);
    f.get();  // single whitespace after maxval
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() != static_cast<std::streamsize>(buf.size()))
        throw std::runtime_error("read_pgm: truncated pixel data in " + path);
    Image img(h, w);
    const float inv = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < buf.size(); ++i) img.v[i] = static_cast<float>(buf[i]) * inv;
    return img;
}

}  // namespace vad
