#include "vad/optical_flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace vad {

namespace {

std::vector<double> gaussian_taps(int half, double sigma) {
    std::vector<double> f(static_cast<std::size_t>(2 * half + 1));
    for (int i = -half; i <= half; ++i)
        f[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
    return f;
}

Image corr_x(const Image& img, const std::vector<double>& f) {
    const int half = static_cast<int>(f.size()) / 2;
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i)
                acc += f[static_cast<std::size_t>(i + half)] * img.at_clamped(y, x + i);
            out.at(y, x) = static_cast<float>(acc);
        }
    return out;
}

Image corr_y(const Image& img, const std::vector<double>& f) {
    const int half = static_cast<int>(f.size()) / 2;
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i)
                acc += f[static_cast<std::size_t>(i + half)] * img.at_clamped(y + i, x);
            out.at(y, x) = static_cast<float>(acc);
        }
    return out;
}

Image box_blur(const Image& img, int win) {
    const int half = win / 2;
    Image tmp(img.h, img.w), out(img.h, img.w);
    const double inv = 1.0 / static_cast<double>(2 * half + 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) acc += img.at_clamped(y, x + i);
            tmp.at(y, x) = static_cast<float>(acc * inv);
        }
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) acc += tmp.at_clamped(y + i, x);
            out.at(y, x) = static_cast<float>(acc * inv);
        }
    return out;
}

// 6x6 symmetric solve by Gaussian elimination with partial pivoting.
std::array<std::array<double, 6>, 6> invert6(std::array<std::array<double, 6>, 6> m) {
    std::array<std::array<double, 6>, 6> inv{};
    for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
        if (std::fabs(m[piv][col]) < 1e-14) throw std::runtime_error("poly_expand: singular metric");
        std::swap(m[col], m[piv]);
        std::swap(inv[col], inv[piv]);
        const double d = m[col][col];
        for (int c = 0; c < 6; ++c) {
            m[col][c] /= d;
            inv[col][c] /= d;
        }
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const double f = m[r][col];
            if (f == 0.0) continue;
            for (int c = 0; c < 6; ++c) {
                m[r][c] -= f * m[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

Image downsample(const Image& img, float scale) {
    // Mild smoothing before decimation.
    static const std::vector<double> k = {0.0625, 0.25, 0.375, 0.25, 0.0625};
    Image s = corr_y(corr_x(img, k), k);
    const int nh = std::max(1, static_cast<int>(std::lround(img.h * scale)));
    const int nw = std::max(1, static_cast<int>(std::lround(img.w * scale)));
    return bilinear_resize(s, nh, nw);
}

}  // namespace

PolyExpansion poly_expand(const Image& img, int n, float sigma) {
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("poly_expand: neighbourhood must be odd and >= 3");
    if (!(sigma > 0.0f)) throw std::invalid_argument("poly_expand: sigma must be > 0");
    const int half = n / 2;
    const std::vector<double> a = gaussian_taps(half, sigma);
    std::vector<double> f0 = a, f1 = a, f2 = a;
    for (int i = -half; i <= half; ++i) {
        f1[static_cast<std::size_t>(i + half)] *= i;
        f2[static_cast<std::size_t>(i + half)] *= static_cast<double>(i) * i;
    }

    // Metric G[j][k] = sum_w a * phi_j * phi_k over the window, identical at
    // every pixel; basis order (1, dx, dy, dx^2, dy^2, dx*dy).
    std::array<std::array<double, 6>, 6> G{};
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            const double w = a[static_cast<std::size_t>(dx + half)] * a[static_cast<std::size_t>(dy + half)];
            const std::array<double, 6> phi = {1.0,
                                               static_cast<double>(dx),
                                               static_cast<double>(dy),
                                               static_cast<double>(dx) * dx,
                                               static_cast<double>(dy) * dy,
                                               static_cast<double>(dx) * dy};
            for (int j = 0; j < 6; ++j)
                for (int k = 0; k < 6; ++k) G[j][k] += w * phi[j] * phi[k];
        }
    const auto Ginv = invert6(G);

    // Projections of the image onto the weighted basis, separably.
    const Image t0 = corr_x(img, f0);
    const Image t1 = corr_x(img, f1);
    const Image t2 = corr_x(img, f2);
    const Image v1 = corr_y(t0, f0);  // 1
    const Image vx = corr_y(t1, f0);  // dx
    const Image vy = corr_y(t0, f1);  // dy
    const Image vxx = corr_y(t2, f0);
    const Image vyy = corr_y(t0, f2);
    const Image vxy = corr_y(t1, f1);

    PolyExpansion e{Image(img.h, img.w), Image(img.h, img.w), Image(img.h, img.w),
                    Image(img.h, img.w), Image(img.h, img.w), Image(img.h, img.w)};
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const std::array<double, 6> v = {v1.at(y, x),  vx.at(y, x),  vy.at(y, x),
                                             vxx.at(y, x), vyy.at(y, x), vxy.at(y, x)};
            std::array<double, 6> r{};
            for (int j = 0; j < 6; ++j)
                for (int k = 0; k < 6; ++k) r[j] += Ginv[j][k] * v[k];
            e.c.at(y, x) = static_cast<float>(r[0]);
            e.bx.at(y, x) = static_cast<float>(r[1]);
            e.by.at(y, x) = static_cast<float>(r[2]);
            e.axx.at(y, x) = static_cast<float>(r[3]);
            e.ayy.at(y, x) = static_cast<float>(r[4]);
            e.axy.at(y, x) = static_cast<float>(r[5]);
        }
    return e;
}

namespace {

// One displacement refinement at a single scale, updating flow in place.
void refine_level(const PolyExpansion& e1, const PolyExpansion& e2, int h, int w, int avg_win,
                  Image& u, Image& v) {
    Image g11(h, w), g12(h, w), g22(h, w), h1(h, w), h2(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double du = u.at(y, x);
            const double dv = v.at(y, x);
            const int rx = static_cast<int>(std::lround(du));
            const int ry = static_cast<int>(std::lround(dv));
            const int x2 = std::clamp(x + rx, 0, w - 1);
            const int y2 = std::clamp(y + ry, 0, h - 1);

            const double a11 = 0.5 * (e1.axx.at(y, x) + e2.axx.at(y2, x2));
            const double a22 = 0.5 * (e1.ayy.at(y, x) + e2.ayy.at(y2, x2));
            const double a12 = 0.25 * (e1.axy.at(y, x) + e2.axy.at(y2, x2));
            const double dbx = -0.5 * (e2.bx.at(y2, x2) - e1.bx.at(y, x)) + a11 * rx + a12 * ry;
            const double dby = -0.5 * (e2.by.at(y2, x2) - e1.by.at(y, x)) + a12 * rx + a22 * ry;

            g11.at(y, x) = static_cast<float>(a11 * a11 + a12 * a12);
            g12.at(y, x) = static_cast<float>(a11 * a12 + a12 * a22);
            g22.at(y, x) = static_cast<float>(a12 * a12 + a22 * a22);
            h1.at(y, x) = static_cast<float>(a11 * dbx + a12 * dby);
            h2.at(y, x) = static_cast<float>(a12 * dbx + a22 * dby);
        }
    g11 = box_blur(g11, avg_win);
    g12 = box_blur(g12, avg_win);
    g22 = box_blur(g22, avg_win);
    h1 = box_blur(h1, avg_win);
    h2 = box_blur(h2, avg_win);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double m11 = g11.at(y, x), m12 = g12.at(y, x), m22 = g22.at(y, x);
            const double det = m11 * m22 - m12 * m12;
            if (det > 1e-12) {
                u.at(y, x) = static_cast<float>((m22 * h1.at(y, x) - m12 * h2.at(y, x)) / det);
                v.at(y, x) = static_cast<float>((m11 * h2.at(y, x) - m12 * h1.at(y, x)) / det);
            }
            // Near-singular neighbourhoods keep the prior (zero at the start),
            // so flat regions produce bounded, near-zero flow.
        }
}

}  // namespace

FlowField farneback_flow(const Image& prev, const Image& next, const FlowParams& p) {
    if (prev.h != next.h || prev.w != next.w)
        throw std::invalid_argument("farneback_flow: frame shapes differ (" + std::to_string(prev.h) +
                                    "x" + std::to_string(prev.w) + " vs " + std::to_string(next.h) +
                                    "x" + std::to_string(next.w) + ")");
    if (p.levels < 1 || p.iterations < 1 || !(p.pyr_scale > 0.0f && p.pyr_scale < 1.0f))
        throw std::invalid_argument("farneback_flow: bad pyramid parameters");

    std::vector<Image> pyr1{prev}, pyr2{next};
    for (int l = 1; l < p.levels; ++l) {
        const Image& base = pyr1.back();
        if (std::min(base.h, base.w) * p.pyr_scale < static_cast<float>(p.poly_n)) break;
        pyr1.push_back(downsample(pyr1.back(), p.pyr_scale));
        pyr2.push_back(downsample(pyr2.back(), p.pyr_scale));
    }

    Image u, v;
    for (int l = static_cast<int>(pyr1.size()) - 1; l >= 0; --l) {
        const Image& i1 = pyr1[static_cast<std::size_t>(l)];
        const Image& i2 = pyr2[static_cast<std::size_t>(l)];
        if (u.v.empty()) {
            u = Image(i1.h, i1.w, 0.0f);
            v = Image(i1.h, i1.w, 0.0f);
        } else {
            const float fx = static_cast<float>(i1.w) / static_cast<float>(u.w);
            const float fy = static_cast<float>(i1.h) / static_cast<float>(u.h);
            u = bilinear_resize(u, i1.h, i1.w);
            v = bilinear_resize(v, i1.h, i1.w);
            for (auto& val : u.v) val *= fx;
            for (auto& val : v.v) val *= fy;
        }
        const PolyExpansion e1 = poly_expand(i1, p.poly_n, p.poly_sigma);
        const PolyExpansion e2 = poly_expand(i2, p.poly_n, p.poly_sigma);
        for (int it = 0; it < p.iterations; ++it) refine_level(e1, e2, i1.h, i1.w, p.avg_win, u, v);
    }
    return FlowField{std::move(u), std::move(v)};
}

std::pair<Image, Image> flow_to_stream(const FlowField& flow, float max_disp) {
    if (!(max_disp > 0.0f)) throw std::invalid_argument("flow_to_stream: max_disp must be > 0");
    Image u01(flow.u.h, flow.u.w), v01(flow.v.h, flow.v.w);
    const float inv = 0.5f / max_disp;
    for (std::size_t i = 0; i < flow.u.v.size(); ++i) {
        u01.v[i] = std::clamp(flow.u.v[i], -max_disp, max_disp) * inv + 0.5f;
        v01.v[i] = std::clamp(flow.v.v[i], -max_disp, max_disp) * inv + 0.5f;
    }
    return {std::move(u01), std::move(v01)};
}

FlowField stream_to_flow(const Image& u01, const Image& v01, float max_disp) {
    FlowField f{Image(u01.h, u01.w), Image(v01.h, v01.w)};
    for (std::size_t i = 0; i < u01.v.size(); ++i) {
        f.u.v[i] = (u01.v[i] - 0.5f) * 2.0f * max_disp;
        f.v.v[i] = (v01.v[i] - 0.5f) * 2.0f * max_disp;
    }
    return f;
}

void write_flo(const std::string& path, const FlowField& flow) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_flo: cannot open " + path);
    f.write("FLO1", 4);
    const std::int32_t h = flow.u.h, w = flow.u.w;
    f.write(reinterpret_cast<const char*>(&h), 4);
    f.write(reinterpret_cast<const char*>(&w), 4);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float uv[2] = {flow.u.at(y, x), flow.v.at(y, x)};
            f.write(reinterpret_cast<const char*>(uv), 8);
        }
    if (!f) throw std::runtime_error("write_flo: short write to " + path);
}

FlowField read_flo(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_flo: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "FLO1")
        throw std::runtime_error("read_flo: bad magic in " + path);
    std::int32_t h = 0, w = 0;
    f.read(reinterpret_cast<char*>(&h), 4);
    f.read(reinterpret_cast<char*>(&w), 4);
    if (!f || h <= 0 || w <= 0) throw std::runtime_error("read_flo: bad header in " + path);
    FlowField flow{Image(h, w), Image(h, w)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float uv[2];
            f.read(reinterpret_cast<char*>(uv), 8);
            flow.u.at(y, x) = uv[0];
            flow.v.at(y, x) = uv[1];
        }
    if (!f) throw std::runtime_error("read_flo: truncated data in " + path);
    return flow;
}

}  // namespace vad
