#include "vad/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace vad {

namespace {
std::vector<Tensor*> as_pointers(std::vector<Tensor>& params) {
    std::vector<Tensor*> out;
    out.reserve(params.size());
    for (Tensor& p : params) out.push_back(&p);
    return out;
}
}  // namespace

double dual_loss(double l_image, double l_flow, const DualLossWeights& w) {
    if (w.w_image < 0.0f || w.w_flow < 0.0f || (w.w_image == 0.0f && w.w_flow == 0.0f))
        throw std::invalid_argument("dual_loss weights must be >= 0 and not both zero");
    return static_cast<double>(w.w_image) * l_image + static_cast<double>(w.w_flow) * l_flow;
}

AdamState AdamState::init(const std::vector<Tensor*>& params, float lr, float beta1, float beta2,
                          float eps) {
    AdamState s;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.push_back(Tensor::zeros(p->shape));
        s.v.push_back(Tensor::zeros(p->shape));
    }
    return s;
}

AdamState AdamState::init(const std::vector<Tensor>& params, float lr, float beta1, float beta2,
                          float eps) {
    std::vector<Tensor> copy = params;  // only shapes matter
    return init(as_pointers(copy), lr, beta1, beta2, eps);
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i]))
            throw std::invalid_argument("adam_step: gradient shape " + shape_str(grads[i].shape) +
                                        " does not match parameter " + shape_str(params[i]->shape));
        if (!grads[i].all_finite())
            throw std::runtime_error("adam_step: non-finite gradient for parameter " +
                                     std::to_string(i) + ", step rejected");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            m.data[j] = state.beta1 * m.data[j] + (1.0f - state.beta1) * g.data[j];
            v.data[j] = state.beta2 * v.data[j] + (1.0f - state.beta2) * g.data[j] * g.data[j];
            const float mhat = static_cast<float>(m.data[j] / bc1);
            const float vhat = static_cast<float>(v.data[j] / bc2);
            p.data[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state) {
    const auto ptrs = as_pointers(params);
    adam_step(ptrs, grads, state);
}

void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, float lr) {
    if (params.size() != grads.size())
        throw std::invalid_argument("sgd_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i]))
            throw std::invalid_argument("sgd_step: gradient shape " + shape_str(grads[i].shape) +
                                        " does not match parameter " + shape_str(params[i]->shape));
        if (!grads[i].all_finite())
            throw std::runtime_error("sgd_step: non-finite gradient for parameter " +
                                     std::to_string(i) + ", step rejected");
        for (std::size_t j = 0; j < params[i]->data.size(); ++j)
            params[i]->data[j] -= lr * grads[i].data[j];
    }
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, float lr) {
    const auto ptrs = as_pointers(params);
    sgd_step(ptrs, grads, lr);
}

}  // namespace vad
