#include "vad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "vad/gemm.hpp"

namespace vad {

namespace {

constexpr float kBceEps = 1e-7f;

void check_rank(const Tensor& t, int rank, const char* what) {
    if (t.rank() != rank)
        throw std::invalid_argument(std::string(what) + " must have rank " + std::to_string(rank) +
                                    ", got shape " + shape_str(t.shape));
}

// ---- conv geometry ------------------------------------------------------

struct Conv2dGeom {
    AxisGeom h, w;
    int batch = 0, cin = 0, cout = 0;
};

Conv2dGeom make_conv2d_geom(const std::vector<int>& xs, const std::vector<int>& ks, const Conv2dOpts& o) {
    Conv2dGeom g;
    g.batch = xs[0];
    g.cin = xs[3];
    g.cout = ks[3];
    if (ks[2] != g.cin)
        throw std::invalid_argument("conv2d channel mismatch: input " + shape_str(xs) + " has Cin=" +
                                    std::to_string(g.cin) + " but kernel " + shape_str(ks) +
                                    " expects Cin=" + std::to_string(ks[2]));
    g.h = conv_axis_geom(xs[1], ks[0], o.stride.first, o.dilation.first, o.padding);
    g.w = conv_axis_geom(xs[2], ks[1], o.stride.second, o.dilation.second, o.padding);
    return g;
}

struct Conv3dGeom {
    AxisGeom t, h, w;
    int batch = 0, cin = 0, cout = 0;
};

Conv3dGeom make_conv3d_geom(const std::vector<int>& xs, const std::vector<int>& ks, const Conv3dOpts& o) {
    Conv3dGeom g;
    g.batch = xs[0];
    g.cin = xs[4];
    g.cout = ks[4];
    if (ks[3] != g.cin)
        throw std::invalid_argument("conv3d channel mismatch: input " + shape_str(xs) + " has Cin=" +
                                    std::to_string(g.cin) + " but kernel " + shape_str(ks) +
                                    " expects Cin=" + std::to_string(ks[3]));
    g.t = conv_axis_geom(xs[1], ks[0], o.stride[0], 1, o.padding);
    g.h = conv_axis_geom(xs[2], ks[1], o.stride[1], 1, o.padding);
    g.w = conv_axis_geom(xs[3], ks[2], o.stride[2], 1, o.padding);
    return g;
}

// ---- im2col (single batch item) -----------------------------------------

void im2col2d(const float* x, const Conv2dGeom& g, float* cols) {
    const int K = g.h.k * g.w.k * g.cin;
    const int W = g.w.in;
    std::memset(cols, 0, sizeof(float) * static_cast<std::size_t>(g.h.out) * g.w.out * K);
    for (int oh = 0; oh < g.h.out; ++oh) {
        for (int ow = 0; ow < g.w.out; ++ow) {
            float* row = cols + (static_cast<std::int64_t>(oh) * g.w.out + ow) * K;
            for (int ky = 0; ky < g.h.k; ++ky) {
                const int iy = oh * g.h.stride - g.h.pad + ky * g.h.dil;
                if (iy < 0 || iy >= g.h.in) continue;
                for (int kx = 0; kx < g.w.k; ++kx) {
                    const int ix = ow * g.w.stride - g.w.pad + kx * g.w.dil;
                    if (ix < 0 || ix >= W) continue;
                    std::memcpy(row + (ky * g.w.k + kx) * g.cin,
                                x + (static_cast<std::int64_t>(iy) * W + ix) * g.cin,
                                sizeof(float) * static_cast<std::size_t>(g.cin));
                }
            }
        }
    }
}

void col2im2d(const float* cols, const Conv2dGeom& g, float* x) {
    const int K = g.h.k * g.w.k * g.cin;
    const int W = g.w.in;
    for (int oh = 0; oh < g.h.out; ++oh) {
        for (int ow = 0; ow < g.w.out; ++ow) {
            const float* row = cols + (static_cast<std::int64_t>(oh) * g.w.out + ow) * K;
            for (int ky = 0; ky < g.h.k; ++ky) {
                const int iy = oh * g.h.stride - g.h.pad + ky * g.h.dil;
                if (iy < 0 || iy >= g.h.in) continue;
                for (int kx = 0; kx < g.w.k; ++kx) {
                    const int ix = ow * g.w.stride - g.w.pad + kx * g.w.dil;
                    if (ix < 0 || ix >= W) continue;
                    float* dst = x + (static_cast<std::int64_t>(iy) * W + ix) * g.cin;
                    const float* src = row + (ky * g.w.k + kx) * g.cin;
                    for (int c = 0; c < g.cin; ++c) dst[c] += src[c];
                }
            }
        }
    }
}

void im2col3d(const float* x, const Conv3dGeom& g, float* cols) {
    const int K = g.t.k * g.h.k * g.w.k * g.cin;
    const int H = g.h.in, W = g.w.in;
    std::memset(cols, 0,
                sizeof(float) * static_cast<std::size_t>(g.t.out) * g.h.out * g.w.out * K);
    for (int ot = 0; ot < g.t.out; ++ot)
        for (int oh = 0; oh < g.h.out; ++oh)
            for (int ow = 0; ow < g.w.out; ++ow) {
                float* row =
                    cols + ((static_cast<std::int64_t>(ot) * g.h.out + oh) * g.w.out + ow) * K;
                for (int kt = 0; kt < g.t.k; ++kt) {
                    const int it = ot * g.t.stride - g.t.pad + kt;
                    if (it < 0 || it >= g.t.in) continue;
                    for (int ky = 0; ky < g.h.k; ++ky) {
                        const int iy = oh * g.h.stride - g.h.pad + ky;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < g.w.k; ++kx) {
                            const int ix = ow * g.w.stride - g.w.pad + kx;
                            if (ix < 0 || ix >= W) continue;
                            std::memcpy(row + ((kt * g.h.k + ky) * g.w.k + kx) * g.cin,
                                        x + ((static_cast<std::int64_t>(it) * H + iy) * W + ix) * g.cin,
                                        sizeof(float) * static_cast<std::size_t>(g.cin));
                        }
                    }
                }
            }
}

void col2im3d(const float* cols, const Conv3dGeom& g, float* x) {
    const int K = g.t.k * g.h.k * g.w.k * g.cin;
    const int H = g.h.in, W = g.w.in;
    for (int ot = 0; ot < g.t.out; ++ot)
        for (int oh = 0; oh < g.h.out; ++oh)
            for (int ow = 0; ow < g.w.out; ++ow) {
                const float* row =
                    cols + ((static_cast<std::int64_t>(ot) * g.h.out + oh) * g.w.out + ow) * K;
                for (int kt = 0; kt < g.t.k; ++kt) {
                    const int it = ot * g.t.stride - g.t.pad + kt;
                    if (it < 0 || it >= g.t.in) continue;
                    for (int ky = 0; ky < g.h.k; ++ky) {
                        const int iy = oh * g.h.stride - g.h.pad + ky;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < g.w.k; ++kx) {
                            const int ix = ow * g.w.stride - g.w.pad + kx;
                            if (ix < 0 || ix >= W) continue;
                            float* dst = x + ((static_cast<std::int64_t>(it) * H + iy) * W + ix) * g.cin;
                            const float* src = row + ((kt * g.h.k + ky) * g.w.k + kx) * g.cin;
                            for (int c = 0; c < g.cin; ++c) dst[c] += src[c];
                        }
                    }
                }
            }
}

// ---- double-accumulation reference paths (AccumMode::F64) ---------------

void conv2d_forward_f64(const Tensor& x, const Tensor& k, const Conv2dGeom& g, Tensor& out) {
    for (int b = 0; b < g.batch; ++b)
        for (int oh = 0; oh < g.h.out; ++oh)
            for (int ow = 0; ow < g.w.out; ++ow)
                for (int co = 0; co < g.cout; ++co) {
                    double acc = 0.0;
                    for (int ky = 0; ky < g.h.k; ++ky) {
                        const int iy = oh * g.h.stride - g.h.pad + ky * g.h.dil;
                        if (iy < 0 || iy >= g.h.in) continue;
                        for (int kx = 0; kx < g.w.k; ++kx) {
                            const int ix = ow * g.w.stride - g.w.pad + kx * g.w.dil;
                            if (ix < 0 || ix >= g.w.in) continue;
                            for (int ci = 0; ci < g.cin; ++ci)
                                acc += static_cast<double>(x.data[x.at4(b, iy, ix, ci)]) *
                                       k.data[k.at4(ky, kx, ci, co)];
                        }
                    }
                    out.data[out.at4(b, oh, ow, co)] = static_cast<float>(acc);
                }
}

void conv3d_forward_f64(const Tensor& x, const Tensor& k, const Conv3dGeom& g, Tensor& out) {
    for (int b = 0; b < g.batch; ++b)
        for (int ot = 0; ot < g.t.out; ++ot)
            for (int oh = 0; oh < g.h.out; ++oh)
                for (int ow = 0; ow < g.w.out; ++ow)
                    for (int co = 0; co < g.cout; ++co) {
                        double acc = 0.0;
                        for (int kt = 0; kt < g.t.k; ++kt) {
                            const int it = ot * g.t.stride - g.t.pad + kt;
                            if (it < 0 || it >= g.t.in) continue;
                            for (int ky = 0; ky < g.h.k; ++ky) {
                                const int iy = oh * g.h.stride - g.h.pad + ky;
                                if (iy < 0 || iy >= g.h.in) continue;
                                for (int kx = 0; kx < g.w.k; ++kx) {
                                    const int ix = ow * g.w.stride - g.w.pad + kx;
                                    if (ix < 0 || ix >= g.w.in) continue;
                                    for (int ci = 0; ci < g.cin; ++ci)
                                        acc += static_cast<double>(
                                                   x.data[x.at5(b, it, iy, ix, ci)]) *
                                               k.data[((static_cast<std::int64_t>(kt) * g.h.k + ky) *
                                                           g.w.k * g.cin +
                                                       kx * g.cin + ci) *
                                                          g.cout +
                                                      co];
                                }
                            }
                        }
                        out.data[out.at5(b, ot, oh, ow, co)] = static_cast<float>(acc);
                    }
}

}  // namespace

AxisGeom conv_axis_geom(int in, int k, int stride, int dil, Padding p) {
    if (stride < 1 || dil < 1)
        throw std::invalid_argument("conv stride/dilation must be >= 1");
    AxisGeom g{in, k, stride, dil, 0, 0};
    const int span = (k - 1) * dil + 1;
    if (p == Padding::Same) {
        g.out = (in + stride - 1) / stride;
        const int total = std::max(0, (g.out - 1) * stride + span - in);
        g.pad = total / 2;
    } else {
        if (in < span)
            throw std::invalid_argument("conv valid padding: kernel span " + std::to_string(span) +
                                        " exceeds input extent " + std::to_string(in));
        g.out = (in - span) / stride + 1;
    }
    return g;
}

// ---- conv2d --------------------------------------------------------------

namespace {

// out[item] = im2col(x[item]) * kermat, accumulated per item to bound memory.
void conv2d_forward_f32(const Tensor& x, const Tensor& k, const Conv2dGeom& g, Tensor& out) {
    const std::int64_t K = static_cast<std::int64_t>(g.h.k) * g.w.k * g.cin;
    const std::int64_t M = static_cast<std::int64_t>(g.h.out) * g.w.out;
    const std::int64_t in_item = static_cast<std::int64_t>(g.h.in) * g.w.in * g.cin;
    std::vector<float> cols(static_cast<std::size_t>(M * K));
    for (int b = 0; b < g.batch; ++b) {
        im2col2d(x.data.data() + b * in_item, g, cols.data());
        detail::gemm_nn(M, g.cout, K, cols.data(), k.data.data(), out.data.data() + b * M * g.cout);
    }
}

void conv2d_grad_weight(const Tensor& x, const Tensor& gout, const Conv2dGeom& g, Tensor& gk) {
    const std::int64_t K = static_cast<std::int64_t>(g.h.k) * g.w.k * g.cin;
    const std::int64_t M = static_cast<std::int64_t>(g.h.out) * g.w.out;
    const std::int64_t in_item = static_cast<std::int64_t>(g.h.in) * g.w.in * g.cin;
    std::vector<float> cols(static_cast<std::size_t>(M * K));
    std::vector<float> gk_item(static_cast<std::size_t>(K * g.cout));
    for (int b = 0; b < g.batch; ++b) {
        im2col2d(x.data.data() + b * in_item, g, cols.data());
        detail::gemm_tn(K, g.cout, M, cols.data(), gout.data.data() + b * M * g.cout, gk_item.data());
        for (std::size_t i = 0; i < gk_item.size(); ++i) gk.data[i] += gk_item[i];
    }
}

void conv2d_grad_input(const Tensor& gout, const Tensor& k, const Conv2dGeom& g, Tensor& gx) {
    const std::int64_t K = static_cast<std::int64_t>(g.h.k) * g.w.k * g.cin;
    const std::int64_t M = static_cast<std::int64_t>(g.h.out) * g.w.out;
    const std::int64_t in_item = static_cast<std::int64_t>(g.h.in) * g.w.in * g.cin;
    std::vector<float> gcols(static_cast<std::size_t>(M * K));
    for (int b = 0; b < g.batch; ++b) {
        detail::gemm_nt(M, K, g.cout, gout.data.data() + b * M * g.cout, k.data.data(), gcols.data());
        col2im2d(gcols.data(), g, gx.data.data() + b * in_item);
    }
}

}  // namespace

NodeId conv2d(Tape& t, NodeId input, NodeId kernel, const Conv2dOpts& opts) {
    const Tensor& x = t.value(input);
    const Tensor& k = t.value(kernel);
    check_rank(x, 4, "conv2d input");
    check_rank(k, 4, "conv2d kernel");
    const Conv2dGeom g = make_conv2d_geom(x.shape, k.shape, opts);
    Tensor out({g.batch, g.h.out, g.w.out, g.cout});
    if (accum_mode() == AccumMode::F64)
        conv2d_forward_f64(x, k, g, out);
    else
        conv2d_forward_f32(x, k, g, out);
    return t.emit(OpKind::Conv2d, {input, kernel}, std::move(out),
                  [input, kernel, g](Tape& tp, const Tensor& gr) {
                      if (tp.requires_grad(kernel)) {
                          Tensor gk = Tensor::zeros(tp.value(kernel).shape);
                          conv2d_grad_weight(tp.value(input), gr, g, gk);
                          tp.accumulate_grad(kernel, std::move(gk));
                      }
                      if (tp.requires_grad(input)) {
                          Tensor gx = Tensor::zeros(tp.value(input).shape);
                          conv2d_grad_input(gr, tp.value(kernel), g, gx);
                          tp.accumulate_grad(input, std::move(gx));
                      }
                  });
}

// ---- conv3d --------------------------------------------------------------

namespace {

void conv3d_forward_f32(const Tensor& x, const Tensor& k, const Conv3dGeom& g, Tensor& out) {
    const std::int64_t K = static_cast<std::int64_t>(g.t.k) * g.h.k * g.w.k * g.cin;
    const std::int64_t M = static_cast<std::int64_t>(g.t.out) * g.h.out * g.w.out;
    const std::int64_t in_item = static_cast<std::int64_t>(g.t.in) * g.h.in * g.w.in * g.cin;
    std::vector<float> cols(static_cast<std::size_t>(M * K));
    for (int b = 0; b < g.batch; ++b) {
        im2col3d(x.data.data() + b * in_item, g, cols.data());
        detail::gemm_nn(M, g.cout, K, cols.data(), k.data.data(), out.data.data() + b * M * g.cout);
    }
}

void conv3d_grad_weight(const Tensor& x, const Tensor& gout, const Conv3dGeom& g, Tensor& gk) {
    const std::int64_t K = static_cast<std::int64_t>(g.t.k) * g.h.k * g.w.k * g.cin;
    const std::int64_t M = static_cast<std::int64_t>(g.t.out) * g.h.out * g.w.out;
    const std::int64_t in_item = static_cast<std::int64_t>(g.t.in) * g.h.in * g.w.in * g.cin;
    std::vector<float> cols(static_cast<std::size_t>(M * K));
    std::vector<float> gk_item(static_cast<std::size_t>(K * g.cout));
    for (int b = 0; b < g.batch; ++b) {
        im2col3d(x.data.data() + b * in_item, g, cols.data());
        detail::gemm_tn(K, g.cout, M, cols.data(), gout.data.data() + b * M * g.cout, gk_item.data());
        for (std::size_t i = 0; i < gk_item.size(); ++i) gk.data[i] += gk_item[i];
    }
}

void conv3d_grad_input(const Tensor& gout, const Tensor& k, const Conv3dGeom& g, Tensor& gx) {
    const std::int64_t K = static_cast<std::int64_t>(g.t.k) * g.h.k * g.w.k * g.cin;
    const std::int64_t M = static_cast<std::int64_t>(g.t.out) * g.h.out * g.w.out;
    const std::int64_t in_item = static_cast<std::int64_t>(g.t.in) * g.h.in * g.w.in * g.cin;
    std::vector<float> gcols(static_cast<std::size_t>(M * K));
    for (int b = 0; b < g.batch; ++b) {
        detail::gemm_nt(M, K, g.cout, gout.data.data() + b * M * g.cout, k.data.data(), gcols.data());
        col2im3d(gcols.data(), g, gx.data.data() + b * in_item);
    }
}

}  // namespace

NodeId conv3d(Tape& t, NodeId input, NodeId kernel, const Conv3dOpts& opts) {
    const Tensor& x = t.value(input);
    const Tensor& k = t.value(kernel);
    check_rank(x, 5, "conv3d input");
    check_rank(k, 5, "conv3d kernel");
    const Conv3dGeom g = make_conv3d_geom(x.shape, k.shape, opts);
    Tensor out({g.batch, g.t.out, g.h.out, g.w.out, g.cout});
    if (accum_mode() == AccumMode::F64)
        conv3d_forward_f64(x, k, g, out);
    else
        conv3d_forward_f32(x, k, g, out);
    return t.emit(OpKind::Conv3d, {input, kernel}, std::move(out),
                  [input, kernel, g](Tape& tp, const Tensor& gr) {
                      if (tp.requires_grad(kernel)) {
                          Tensor gk = Tensor::zeros(tp.value(kernel).shape);
                          conv3d_grad_weight(tp.value(input), gr, g, gk);
                          tp.accumulate_grad(kernel, std::move(gk));
                      }
                      if (tp.requires_grad(input)) {
                          Tensor gx = Tensor::zeros(tp.value(input).shape);
                          conv3d_grad_input(gr, tp.value(kernel), g, gx);
                          tp.accumulate_grad(input, std::move(gx));
                      }
                  });
}

// ---- conv_transpose2d ----------------------------------------------------

NodeId conv_transpose2d(Tape& t, NodeId input, NodeId kernel, const Conv2dOpts& opts,
                        std::pair<int, int> out_hw) {
    const Tensor& y = t.value(input);
    const Tensor& k = t.value(kernel);
    check_rank(y, 4, "conv_transpose2d input");
    check_rank(k, 4, "conv_transpose2d kernel");
    // Geometry of the forward conv this op is the adjoint of.
    const std::vector<int> xs{y.shape[0], out_hw.first, out_hw.second, k.shape[2]};
    const Conv2dGeom g = make_conv2d_geom(xs, k.shape, opts);
    if (g.h.out != y.shape[1] || g.w.out != y.shape[2] || g.cout != y.shape[3])
        throw std::invalid_argument("conv_transpose2d: input " + shape_str(y.shape) +
                                    " is not the conv2d image of a " + shape_str(xs) + " tensor");
    Tensor out(xs);
    conv2d_grad_input(y, k, g, out);
    return t.emit(OpKind::ConvTranspose2d, {input, kernel}, std::move(out),
                  [input, kernel, g](Tape& tp, const Tensor& gr) {
                      if (tp.requires_grad(input)) {
                          Tensor gy({g.batch, g.h.out, g.w.out, g.cout});
                          conv2d_forward_f32(gr, tp.value(kernel), g, gy);
                          tp.accumulate_grad(input, std::move(gy));
                      }
                      if (tp.requires_grad(kernel)) {
                          Tensor gk = Tensor::zeros(tp.value(kernel).shape);
                          conv2d_grad_weight(gr, tp.value(input), g, gk);
                          tp.accumulate_grad(kernel, std::move(gk));
                      }
                  });
}

// ---- upsampling ----------------------------------------------------------

NodeId upsample_nearest2d(Tape& t, NodeId input, int factor) {
    const Tensor& x = t.value(input);
    check_rank(x, 4, "upsample_nearest2d input");
    if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1, got " + std::to_string(factor));
    const int B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3];
    Tensor out({B, H * factor, W * factor, C});
    for (int b = 0; b < B; ++b)
        for (int y = 0; y < H * factor; ++y)
            for (int xx = 0; xx < W * factor; ++xx)
                std::memcpy(&out.data[out.at4(b, y, xx, 0)],
                            &x.data[x.at4(b, y / factor, xx / factor, 0)], sizeof(float) * C);
    return t.emit(OpKind::Upsample2d, {input}, std::move(out),
                  [input, factor, B, H, W, C](Tape& tp, const Tensor& gr) {
                      if (!tp.requires_grad(input)) return;
                      Tensor gx = Tensor::zeros({B, H, W, C});
                      for (int b = 0; b < B; ++b)
                          for (int y = 0; y < H * factor; ++y)
                              for (int xx = 0; xx < W * factor; ++xx) {
                                  const float* src = &gr.data[gr.at4(b, y, xx, 0)];
                                  float* dst = &gx.data[gx.at4(b, y / factor, xx / factor, 0)];
                                  for (int c = 0; c < C; ++c) dst[c] += src[c];
                              }
                      tp.accumulate_grad(input, std::move(gx));
                  });
}

NodeId upsample_nearest3d(Tape& t, NodeId input, int ft, int fh, int fw) {
    const Tensor& x = t.value(input);
    check_rank(x, 5, "upsample_nearest3d input");
    if (ft < 1 || fh < 1 || fw < 1) throw std::invalid_argument("upsample factors must be >= 1");
    const int B = x.shape[0], T = x.shape[1], H = x.shape[2], W = x.shape[3], C = x.shape[4];
    Tensor out({B, T * ft, H * fh, W * fw, C});
    for (int b = 0; b < B; ++b)
        for (int tt = 0; tt < T * ft; ++tt)
            for (int y = 0; y < H * fh; ++y)
                for (int xx = 0; xx < W * fw; ++xx)
                    std::memcpy(&out.data[out.at5(b, tt, y, xx, 0)],
                                &x.data[x.at5(b, tt / ft, y / fh, xx / fw, 0)], sizeof(float) * C);
    return t.emit(OpKind::Upsample3d, {input}, std::move(out),
                  [input, ft, fh, fw, B, T, H, W, C](Tape& tp, const Tensor& gr) {
                      if (!tp.requires_grad(input)) return;
                      Tensor gx = Tensor::zeros({B, T, H, W, C});
                      for (int b = 0; b < B; ++b)
                          for (int tt = 0; tt < T * ft; ++tt)
                              for (int y = 0; y < H * fh; ++y)
                                  for (int xx = 0; xx < W * fw; ++xx) {
                                      const float* src = &gr.data[gr.at5(b, tt, y, xx, 0)];
                                      float* dst = &gx.data[gx.at5(b, tt / ft, y / fh, xx / fw, 0)];
                                      for (int c = 0; c < C; ++c) dst[c] += src[c];
                                  }
                      tp.accumulate_grad(input, std::move(gx));
                  });
}

// ---- activations ---------------------------------------------------------

NodeId leaky_relu(Tape& t, NodeId input, float slope) {
    if (!(slope >= 0.0f && slope < 1.0f))
        throw std::invalid_argument("leaky_relu slope must be in [0,1), got " + std::to_string(slope));
    const Tensor& x = t.value(input);
    Tensor out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = x.data[i] >= 0.0f ? x.data[i] : slope * x.data[i];
    return t.emit(OpKind::LeakyRelu, {input}, std::move(out),
                  [input, slope](Tape& tp, const Tensor& gr) {
                      if (!tp.requires_grad(input)) return;
                      const Tensor& xv = tp.value(input);
                      Tensor gx(xv.shape);
                      for (std::size_t i = 0; i < xv.data.size(); ++i)
                          gx.data[i] = gr.data[i] * (xv.data[i] >= 0.0f ? 1.0f : slope);
                      tp.accumulate_grad(input, std::move(gx));
                  });
}

NodeId sigmoid(Tape& t, NodeId input) {
    const Tensor& x = t.value(input);
    Tensor out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const float v = x.data[i];
        out.data[i] = v >= 0.0f ? 1.0f / (1.0f + std::exp(-v))
                                : std::exp(v) / (1.0f + std::exp(v));
    }
    // The backward pass reuses the saved forward output (self id is known
    // before emit because the tape is append-only).
    const NodeId self = static_cast<NodeId>(t.size());
    return t.emit(OpKind::Sigmoid, {input}, std::move(out),
                  [input, self](Tape& tp, const Tensor& gr) {
                      if (!tp.requires_grad(input)) return;
                      const Tensor& s = tp.value(self);
                      Tensor gx(s.shape);
                      for (std::size_t i = 0; i < s.data.size(); ++i)
                          gx.data[i] = gr.data[i] * s.data[i] * (1.0f - s.data[i]);
                      tp.accumulate_grad(input, std::move(gx));
                  });
}

// ---- structural ops ------------------------------------------------------

NodeId add(Tape& t, NodeId a, NodeId b) {
    const Tensor& xa = t.value(a);
    const Tensor& xb = t.value(b);
    require_shape(xa.same_shape(xb),
                  "add shape mismatch: " + shape_str(xa.shape) + " vs " + shape_str(xb.shape));
    Tensor out(xa.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = xa.data[i] + xb.data[i];
    const NodeId id = t.emit(OpKind::Add, {a, b}, std::move(out),
                             [a, b](Tape& tp, const Tensor& gr) {
                                 if (tp.requires_grad(a)) tp.accumulate_grad(a, gr);
                                 if (tp.requires_grad(b)) tp.accumulate_grad(b, gr);
                             });
    if (xa.numel() == 1) {
        t.node(id).scalar_hi = t.scalar(a) + t.scalar(b);
        t.node(id).has_scalar_hi = true;
    }
    return id;
}

NodeId bias_add(Tape& t, NodeId x, NodeId bias) {
    const Tensor& xv = t.value(x);
    const Tensor& bv = t.value(bias);
    const int C = xv.shape.back();
    require_shape(bv.rank() == 1 && bv.shape[0] == C,
                  "bias_add: bias " + shape_str(bv.shape) + " does not match channels of " +
                      shape_str(xv.shape));
    Tensor out(xv.shape);
    const std::int64_t rows = xv.numel() / C;
    for (std::int64_t r = 0; r < rows; ++r)
        for (int c = 0; c < C; ++c) out.data[r * C + c] = xv.data[r * C + c] + bv.data[c];
    return t.emit(OpKind::BiasAdd, {x, bias}, std::move(out),
                  [x, bias, rows, C](Tape& tp, const Tensor& gr) {
                      if (tp.requires_grad(x)) tp.accumulate_grad(x, gr);
                      if (tp.requires_grad(bias)) {
                          Tensor gb = Tensor::zeros({C});
                          for (std::int64_t r = 0; r < rows; ++r)
                              for (int c = 0; c < C; ++c) gb.data[c] += gr.data[r * C + c];
                          tp.accumulate_grad(bias, std::move(gb));
                      }
                  });
}

NodeId concat_channels(Tape& t, NodeId a, NodeId b) {
    const Tensor& xa = t.value(a);
    const Tensor& xb = t.value(b);
    require_shape(xa.rank() == xb.rank() && xa.rank() >= 2,
                  "concat_channels rank mismatch: " + shape_str(xa.shape) + " vs " + shape_str(xb.shape));
    for (int i = 0; i + 1 < xa.rank(); ++i)
        require_shape(xa.shape[i] == xb.shape[i], "concat_channels leading-dim mismatch: " +
                                                      shape_str(xa.shape) + " vs " + shape_str(xb.shape));
    const int Ca = xa.shape.back(), Cb = xb.shape.back();
    std::vector<int> os = xa.shape;
    os.back() = Ca + Cb;
    Tensor out(os);
    const std::int64_t rows = xa.numel() / Ca;
    for (std::int64_t r = 0; r < rows; ++r) {
        std::memcpy(&out.data[r * (Ca + Cb)], &xa.data[r * Ca], sizeof(float) * Ca);
        std::memcpy(&out.data[r * (Ca + Cb) + Ca], &xb.data[r * Cb], sizeof(float) * Cb);
    }
    return t.emit(OpKind::ConcatChannels, {a, b}, std::move(out),
                  [a, b, rows, Ca, Cb](Tape& tp, const Tensor& gr) {
                      if (tp.requires_grad(a)) {
                          Tensor ga(tp.value(a).shape);
                          for (std::int64_t r = 0; r < rows; ++r)
                              std::memcpy(&ga.data[r * Ca], &gr.data[r * (Ca + Cb)], sizeof(float) * Ca);
                          tp.accumulate_grad(a, std::move(ga));
                      }
                      if (tp.requires_grad(b)) {
                          Tensor gb(tp.value(b).shape);
                          for (std::int64_t r = 0; r < rows; ++r)
                              std::memcpy(&gb.data[r * Cb], &gr.data[r * (Ca + Cb) + Ca],
                                          sizeof(float) * Cb);
                          tp.accumulate_grad(b, std::move(gb));
                      }
                  });
}

NodeId reshape(Tape& t, NodeId x, std::vector<int> new_shape) {
    const Tensor& xv = t.value(x);
    require_shape(shape_numel(new_shape) == xv.numel(),
                  "reshape " + shape_str(xv.shape) + " -> " + shape_str(new_shape) +
                      " changes element count");
    Tensor out(new_shape, xv.data);
    return t.emit(OpKind::Reshape, {x}, std::move(out), [x](Tape& tp, const Tensor& gr) {
        if (!tp.requires_grad(x)) return;
        Tensor gx(tp.value(x).shape, gr.data);
        tp.accumulate_grad(x, std::move(gx));
    });
}

// ---- dense / pooling -----------------------------------------------------

NodeId dense(Tape& t, NodeId x, NodeId w) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    check_rank(xv, 2, "dense input");
    check_rank(wv, 2, "dense weight");
    require_shape(xv.shape[1] == wv.shape[0], "dense: input " + shape_str(xv.shape) +
                                                  " incompatible with weight " + shape_str(wv.shape));
    const int B = xv.shape[0], F = xv.shape[1], O = wv.shape[1];
    Tensor out({B, O});
    detail::gemm_nn(B, O, F, xv.data.data(), wv.data.data(), out.data.data());
    return t.emit(OpKind::Dense, {x, w}, std::move(out),
                  [x, w, B, F, O](Tape& tp, const Tensor& gr) {
                      if (tp.requires_grad(x)) {
                          Tensor gx({B, F});
                          detail::gemm_nt(B, F, O, gr.data.data(), tp.value(w).data.data(),
                                          gx.data.data());
                          tp.accumulate_grad(x, std::move(gx));
                      }
                      if (tp.requires_grad(w)) {
                          Tensor gw({F, O});
                          detail::gemm_tn(F, O, B, tp.value(x).data.data(), gr.data.data(),
                                          gw.data.data());
                          tp.accumulate_grad(w, std::move(gw));
                      }
                  });
}

NodeId global_avg_pool(Tape& t, NodeId x) {
    const Tensor& xv = t.value(x);
    if (xv.rank() < 3)
        throw std::invalid_argument("global_avg_pool needs rank >= 3, got " + shape_str(xv.shape));
    const int B = xv.shape[0];
    const int C = xv.shape.back();
    const std::int64_t M = xv.numel() / (static_cast<std::int64_t>(B) * C);
    Tensor out({B, C});
    const bool hi = accum_mode() == AccumMode::F64;
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            double accd = 0.0;
            float accf = 0.0f;
            for (std::int64_t m = 0; m < M; ++m) {
                const float v = xv.data[(b * M + m) * C + c];
                if (hi) accd += v; else accf += v;
            }
            out.data[static_cast<std::int64_t>(b) * C + c] =
                hi ? static_cast<float>(accd / static_cast<double>(M)) : accf / static_cast<float>(M);
        }
    return t.emit(OpKind::GlobalAvgPool, {x}, std::move(out),
                  [x, B, C, M](Tape& tp, const Tensor& gr) {
                      if (!tp.requires_grad(x)) return;
                      Tensor gx = Tensor::zeros(tp.value(x).shape);
                      const float inv = 1.0f / static_cast<float>(M);
                      for (int b = 0; b < B; ++b)
                          for (std::int64_t m = 0; m < M; ++m)
                              for (int c = 0; c < C; ++c)
                                  gx.data[(b * M + m) * C + c] =
                                      gr.data[static_cast<std::int64_t>(b) * C + c] * inv;
                      tp.accumulate_grad(x, std::move(gx));
                  });
}

// ---- reductions ----------------------------------------------------------

NodeId mse(Tape& t, NodeId x, NodeId xhat) {
    const Tensor& a = t.value(x);
    const Tensor& b = t.value(xhat);
    require_shape(a.same_shape(b),
                  "mse shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const std::int64_t n = a.numel();
    double accd = 0.0;
    float accf = 0.0f;
    const bool hi = accum_mode() == AccumMode::F64;
    for (std::int64_t i = 0; i < n; ++i) {
        const float d = a.data[i] - b.data[i];
        if (hi) accd += static_cast<double>(d) * d; else accf += d * d;
    }
    const double value = hi ? accd / static_cast<double>(n)
                            : static_cast<double>(accf / static_cast<float>(n));
    Tensor out = Tensor::scalar(static_cast<float>(value));
    const NodeId id = t.emit(OpKind::Mse, {x, xhat}, std::move(out),
                             [x, xhat, n](Tape& tp, const Tensor& gr) {
                                 const Tensor& av = tp.value(x);
                                 const Tensor& bv = tp.value(xhat);
                                 const float gs = gr.data[0] * 2.0f / static_cast<float>(n);
                                 if (tp.requires_grad(x)) {
                                     Tensor gx(av.shape);
                                     for (std::int64_t i = 0; i < n; ++i)
                                         gx.data[i] = gs * (av.data[i] - bv.data[i]);
                                     tp.accumulate_grad(x, std::move(gx));
                                 }
                                 if (tp.requires_grad(xhat)) {
                                     Tensor gb(bv.shape);
                                     for (std::int64_t i = 0; i < n; ++i)
                                         gb.data[i] = -gs * (av.data[i] - bv.data[i]);
                                     tp.accumulate_grad(xhat, std::move(gb));
                                 }
                             });
    t.node(id).scalar_hi = value;
    t.node(id).has_scalar_hi = true;
    return id;
}

NodeId bce(Tape& t, NodeId prob, NodeId target) {
    const Tensor& p = t.value(prob);
    const Tensor& y = t.value(target);
    require_shape(p.same_shape(y),
                  "bce shape mismatch: " + shape_str(p.shape) + " vs " + shape_str(y.shape));
    const std::int64_t n = p.numel();
    double accd = 0.0;
    float accf = 0.0f;
    const bool hi = accum_mode() == AccumMode::F64;
    for (std::int64_t i = 0; i < n; ++i) {
        const float pc = std::clamp(p.data[i], kBceEps, 1.0f - kBceEps);
        const float term = -(y.data[i] * std::log(pc) + (1.0f - y.data[i]) * std::log(1.0f - pc));
        if (hi) accd += term; else accf += term;
    }
    const double value = hi ? accd / static_cast<double>(n)
                            : static_cast<double>(accf / static_cast<float>(n));
    Tensor out = Tensor::scalar(static_cast<float>(value));
    const NodeId id = t.emit(
        OpKind::Bce, {prob, target}, std::move(out), [prob, target, n](Tape& tp, const Tensor& gr) {
            const Tensor& pv = tp.value(prob);
            const Tensor& yv = tp.value(target);
            const float gs = gr.data[0] / static_cast<float>(n);
            if (tp.requires_grad(prob)) {
                Tensor gp = Tensor::zeros(pv.shape);
                for (std::int64_t i = 0; i < n; ++i) {
                    const float praw = pv.data[i];
                    if (praw <= kBceEps || praw >= 1.0f - kBceEps) continue;  // clamped: flat
                    gp.data[i] = gs * (praw - yv.data[i]) / (praw * (1.0f - praw));
                }
                tp.accumulate_grad(prob, std::move(gp));
            }
            if (tp.requires_grad(target)) {
                Tensor gy(yv.shape);
                for (std::int64_t i = 0; i < n; ++i) {
                    const float pc = std::clamp(pv.data[i], kBceEps, 1.0f - kBceEps);
                    gy.data[i] = gs * (std::log(1.0f - pc) - std::log(pc));
                }
                tp.accumulate_grad(target, std::move(gy));
            }
        });
    t.node(id).scalar_hi = value;
    t.node(id).has_scalar_hi = true;
    return id;
}

NodeId proj(Tape& t, NodeId x, Tensor weights) {
    const Tensor& xv = t.value(x);
    require_shape(xv.same_shape(weights), "proj shape mismatch: " + shape_str(xv.shape) + " vs " +
                                              shape_str(weights.shape));
    double accd = 0.0;
    float accf = 0.0f;
    const bool hi = accum_mode() == AccumMode::F64;
    for (std::size_t i = 0; i < xv.data.size(); ++i) {
        if (hi) accd += static_cast<double>(xv.data[i]) * weights.data[i];
        else accf += xv.data[i] * weights.data[i];
    }
    const double value = hi ? accd : static_cast<double>(accf);
    Tensor out = Tensor::scalar(static_cast<float>(value));
    const NodeId id =
        t.emit(OpKind::Proj, {x}, std::move(out), [x, w = std::move(weights)](Tape& tp, const Tensor& gr) {
            if (!tp.requires_grad(x)) return;
            Tensor gx(w.shape);
            for (std::size_t i = 0; i < w.data.size(); ++i) gx.data[i] = gr.data[0] * w.data[i];
            tp.accumulate_grad(x, std::move(gx));
        });
    t.node(id).scalar_hi = value;
    t.node(id).has_scalar_hi = true;
    return id;
}

NodeId scale(Tape& t, NodeId x, float c) {
    const Tensor& xv = t.value(x);
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = xv.data[i] * c;
    const NodeId id = t.emit(OpKind::Scale, {x}, std::move(out), [x, c](Tape& tp, const Tensor& gr) {
        if (!tp.requires_grad(x)) return;
        Tensor gx(gr.shape);
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] = gr.data[i] * c;
        tp.accumulate_grad(x, std::move(gx));
    });
    if (xv.numel() == 1) {
        t.node(id).scalar_hi = t.scalar(x) * static_cast<double>(c);
        t.node(id).has_scalar_hi = true;
    }
    return id;
}

}  // namespace vad
