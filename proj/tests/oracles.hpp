#pragma once

// Independent reference implementations for checking the production code.
// Everything here is deliberately written the slow, obvious way and kept
// free of the library's fast paths.

#include <array>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "vad/image.hpp"
#include "vad/ops.hpp"
#include "vad/tensor.hpp"

namespace oracle {

vad::Tensor rand_tensor(std::vector<int> shape, std::mt19937_64& rng, float lo = -1.0f,
                        float hi = 1.0f);

// quadruple-loop cross-correlation, double accumulation
vad::Tensor conv2d_naive(const vad::Tensor& x, const vad::Tensor& k, std::pair<int, int> stride,
                         std::pair<int, int> dilation, vad::Padding pad);
vad::Tensor conv3d_naive(const vad::Tensor& x, const vad::Tensor& k, std::array<int, 3> stride,
                         vad::Padding pad);

double inner(const vad::Tensor& a, const vad::Tensor& b);

double mse_naive(const vad::Tensor& a, const vad::Tensor& b);

struct FdReport {
    double rel_err = 0.0;
    double analytic_norm = 0.0;
    double fd_norm = 0.0;
};

/// Central finite differences of a scalar functional of several tensors,
/// compared against the supplied analytic gradients with a vector-norm
/// relative error.
FdReport fd_check(const std::function<double(const std::vector<vad::Tensor>&)>& f,
                  std::vector<vad::Tensor> inputs,
                  const std::vector<vad::Tensor>& analytic_grads, double h = 1e-3);

/// Mann–Whitney rank statistic, ties counted 0.5, exhaustive pair counting.
double auc_rank_pairs(const std::vector<double>& scores, const std::vector<int>& labels);

vad::Image bilinear_naive(const vad::Image& src, int oh, int ow);

/// Direct weighted least-squares quadratic fit at one pixel (normal
/// equations over the full window, replicate border); returns
/// (c, bx, by, axx, ayy, axy).
std::array<double, 6> poly_fit_direct(const vad::Image& img, int cy, int cx, int n, double sigma);

}  // namespace oracle
