#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

using vad::AxisGeom;
using vad::Image;
using vad::Padding;
using vad::Tensor;

vad::Tensor rand_tensor(std::vector<int> shape, std::mt19937_64& rng, float lo, float hi) {
    return Tensor::uniform(std::move(shape), lo, hi, rng);
}

namespace {
AxisGeom geom(int in, int k, int stride, int dil, Padding p) {
    return vad::conv_axis_geom(in, k, stride, dil, p);
}
}  // namespace

Tensor conv2d_naive(const Tensor& x, const Tensor& k, std::pair<int, int> stride,
                    std::pair<int, int> dilation, Padding pad) {
    const int B = x.shape[0], Ci = x.shape[3], Co = k.shape[3];
    const AxisGeom gh = geom(x.shape[1], k.shape[0], stride.first, dilation.first, pad);
    const AxisGeom gw = geom(x.shape[2], k.shape[1], stride.second, dilation.second, pad);
    Tensor out({B, gh.out, gw.out, Co});
    for (int b = 0; b < B; ++b)
        for (int oh = 0; oh < gh.out; ++oh)
            for (int ow = 0; ow < gw.out; ++ow)
                for (int co = 0; co < Co; ++co) {
                    double acc = 0.0;
                    for (int ky = 0; ky < k.shape[0]; ++ky)
                        for (int kx = 0; kx < k.shape[1]; ++kx)
                            for (int ci = 0; ci < Ci; ++ci) {
                                const int iy = oh * gh.stride - gh.pad + ky * gh.dil;
                                const int ix = ow * gw.stride - gw.pad + kx * gw.dil;
                                if (iy < 0 || iy >= x.shape[1] || ix < 0 || ix >= x.shape[2])
                                    continue;
                                acc += static_cast<double>(x.data[x.at4(b, iy, ix, ci)]) *
                                       k.data[k.at4(ky, kx, ci, co)];
                            }
                    out.data[out.at4(b, oh, ow, co)] = static_cast<float>(acc);
                }
    return out;
}

Tensor conv3d_naive(const Tensor& x, const Tensor& k, std::array<int, 3> stride, Padding pad) {
    const int B = x.shape[0], Ci = x.shape[4], Co = k.shape[4];
    const AxisGeom gt = geom(x.shape[1], k.shape[0], stride[0], 1, pad);
    const AxisGeom gh = geom(x.shape[2], k.shape[1], stride[1], 1, pad);
    const AxisGeom gw = geom(x.shape[3], k.shape[2], stride[2], 1, pad);
    Tensor out({B, gt.out, gh.out, gw.out, Co});
    const auto kat = [&](int kt, int ky, int kx, int ci, int co) {
        return (((static_cast<std::int64_t>(kt) * k.shape[1] + ky) * k.shape[2] + kx) * k.shape[3] +
                ci) * k.shape[4] + co;
    };
    for (int b = 0; b < B; ++b)
        for (int ot = 0; ot < gt.out; ++ot)
            for (int oh = 0; oh < gh.out; ++oh)
                for (int ow = 0; ow < gw.out; ++ow)
                    for (int co = 0; co < Co; ++co) {
                        double acc = 0.0;
                        for (int kt = 0; kt < k.shape[0]; ++kt)
                            for (int ky = 0; ky < k.shape[1]; ++ky)
                                for (int kx = 0; kx < k.shape[2]; ++kx)
                                    for (int ci = 0; ci < Ci; ++ci) {
                                        const int it = ot * gt.stride - gt.pad + kt;
                                        const int iy = oh * gh.stride - gh.pad + ky;
                                        const int ix = ow * gw.stride - gw.pad + kx;
                                        if (it < 0 || it >= x.shape[1] || iy < 0 ||
                                            iy >= x.shape[2] || ix < 0 || ix >= x.shape[3])
                                            continue;
                                        acc += static_cast<double>(
                                                   x.data[x.at5(b, it, iy, ix, ci)]) *
                                               k.data[kat(kt, ky, kx, ci, co)];
                                    }
                        out.data[out.at5(b, ot, oh, ow, co)] = static_cast<float>(acc);
                    }
    return out;
}

double inner(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("oracle::inner shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        acc += static_cast<double>(a.data[i]) * b.data[i];
    return acc;
}

double mse_naive(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("oracle::mse shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

FdReport fd_check(const std::function<double(const std::vector<Tensor>&)>& f,
                  std::vector<Tensor> inputs, const std::vector<Tensor>& analytic_grads, double h) {
    double num = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::size_t i = 0; i < inputs[t].data.size(); ++i) {
            const float orig = inputs[t].data[i];
            inputs[t].data[i] = static_cast<float>(orig + h);
            const double fp = f(inputs);
            inputs[t].data[i] = static_cast<float>(orig - h);
            const double fm = f(inputs);
            inputs[t].data[i] = orig;
            const double g_fd = (fp - fm) / (2.0 * h);
            const double g_an = analytic_grads[t].data[i];
            num += (g_an - g_fd) * (g_an - g_fd);
            na += g_an * g_an;
            nf += g_fd * g_fd;
        }
    }
    FdReport rep;
    rep.analytic_norm = std::sqrt(na);
    rep.fd_norm = std::sqrt(nf);
    rep.rel_err = std::sqrt(num) / std::max({rep.analytic_norm, rep.fd_norm, 1e-12});
    return rep;
}

double auc_rank_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::int64_t P = 0, N = 0, wins2 = 0;
    for (int l : labels) (l ? P : N) += 1;
    if (P == 0 || N == 0) throw std::invalid_argument("auc_rank_pairs: single-class labels");
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) wins2 += 2;
            else if (scores[i] == scores[j]) wins2 += 1;
        }
    }
    return static_cast<double>(wins2) / (2.0 * static_cast<double>(P) * static_cast<double>(N));
}

Image bilinear_naive(const Image& src, int oh, int ow) {
    Image out(oh, ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double fy = (y + 0.5) * static_cast<double>(src.h) / oh - 0.5;
            double fx = (x + 0.5) * static_cast<double>(src.w) / ow - 0.5;
            fy = std::clamp(fy, 0.0, static_cast<double>(src.h - 1));
            fx = std::clamp(fx, 0.0, static_cast<double>(src.w - 1));
            const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
            const int y1 = std::min(y0 + 1, src.h - 1), x1 = std::min(x0 + 1, src.w - 1);
            const double wy = fy - y0, wx = fx - x0;
            out.at(y, x) =
                static_cast<float>((1 - wy) * ((1 - wx) * src.at(y0, x0) + wx * src.at(y0, x1)) +
                                   wy * ((1 - wx) * src.at(y1, x0) + wx * src.at(y1, x1)));
        }
    return out;
}

std::array<double, 6> poly_fit_direct(const Image& img, int cy, int cx, int n, double sigma) {
    const int half = n / 2;
    std::array<std::array<double, 6>, 6> G{};
    std::array<double, 6> rhs{};
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            const double w = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
            const std::array<double, 6> phi = {1.0,
                                               static_cast<double>(dx),
                                               static_cast<double>(dy),
                                               static_cast<double>(dx) * dx,
                                               static_cast<double>(dy) * dy,
                                               static_cast<double>(dx) * dy};
            const double val = img.at_clamped(cy + dy, cx + dx);
            for (int j = 0; j < 6; ++j) {
                rhs[j] += w * phi[j] * val;
                for (int k = 0; k < 6; ++k) G[j][k] += w * phi[j] * phi[k];
            }
        }
    std::array<double, 6>& b = rhs;
    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::fabs(G[r][col]) > std::fabs(G[piv][col])) piv = r;
        std::swap(G[col], G[piv]);
        std::swap(b[col], b[piv]);
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const double f = G[r][col] / G[col][col];
            for (int c = col; c < 6; ++c) G[r][c] -= f * G[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<double, 6> sol{};
    for (int i = 0; i < 6; ++i) sol[i] = b[i] / G[i][i];
    return sol;
}

}  // namespace oracle
