#pragma once

#include <vector>

#include "vad/tensor.hpp"

namespace vad {

/// Per-stream weights for the combined reconstruction loss.
struct DualLossWeights {
    float w_image = 1.0f;
    float w_flow = 1.0f;
};

/// Weighted sum of the two per-stream losses.
double dual_loss(double l_image, double l_flow, const DualLossWeights& w);

/// Adam moments for one parameter set, flat in the same order as the
/// parameter tensors handed to adam_step.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::int64_t t = 0;
    float lr = 2e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float eps = 1e-8f;

    static AdamState init(const std::vector<Tensor>& params, float lr = 2e-4f, float beta1 = 0.5f,
                          float beta2 = 0.999f, float eps = 1e-8f);
    static AdamState init(const std::vector<Tensor*>& params, float lr = 2e-4f, float beta1 = 0.5f,
                          float beta2 = 0.999f, float eps = 1e-8f);
};

/// One Adam update with bias correction. Rejects non-finite gradients.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state);
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state);

/// Plain SGD: p <- p - lr * g.
void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, float lr);
void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, float lr);

}  // namespace vad
