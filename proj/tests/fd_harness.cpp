#include "fd_harness.hpp"

#include "vad/models.hpp"
#include "vad/ops.hpp"
#include "vad/tape.hpp"

namespace fdh {

using vad::AccumMode;
using vad::AccumModeGuard;
using vad::NodeId;
using vad::Tape;
using vad::Tensor;

namespace {

// Projects a graph output to a scalar with fixed random weights and checks
// d(proj)/d(input_i) for every input against central differences.
CheckResult check_graph(const std::string& name, std::vector<Tensor> inputs,
                        const std::function<NodeId(Tape&, const std::vector<NodeId>&)>& graph,
                        std::mt19937_64& rng) {
    const AccumModeGuard guard(AccumMode::F64);
    // forward once to size the projection weights
    Tensor proj_w;
    {
        Tape t;
        std::vector<NodeId> ids;
        for (const Tensor& in : inputs) ids.push_back(t.leaf(in, false));
        const NodeId out = graph(t, ids);
        proj_w = oracle::rand_tensor(t.value(out).shape, rng);
    }
    const auto scalar_of = [&](const std::vector<Tensor>& in) {
        Tape t;
        std::vector<NodeId> ids;
        for (const Tensor& x : in) ids.push_back(t.leaf(x, false));
        const NodeId out = graph(t, ids);
        if (t.value(out).numel() == 1) return t.scalar(out);
        return t.scalar(vad::proj(t, out, proj_w));
    };
    // analytic gradients
    std::vector<Tensor> grads;
    {
        Tape t;
        std::vector<NodeId> ids;
        for (const Tensor& x : inputs) ids.push_back(t.leaf(x, true));
        NodeId out = graph(t, ids);
        if (t.value(out).numel() != 1) out = vad::proj(t, out, proj_w);
        t.backward(out);
        for (const NodeId id : ids) grads.push_back(t.grad(id));
    }
    const oracle::FdReport rep = oracle::fd_check(scalar_of, std::move(inputs), grads);
    return {name, rep.rel_err};
}

}  // namespace

std::vector<CheckResult> run_layer_checks(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<CheckResult> results;

    {
        Tensor x = oracle::rand_tensor({2, 5, 6, 2}, rng);
        Tensor k = oracle::rand_tensor({3, 3, 2, 3}, rng);
        results.push_back(check_graph(
            "conv2d_same", {x, k},
            [](Tape& t, const std::vector<NodeId>& in) { return vad::conv2d(t, in[0], in[1]); },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({1, 7, 8, 2}, rng);
        Tensor k = oracle::rand_tensor({3, 3, 2, 2}, rng);
        vad::Conv2dOpts o;
        o.stride = {2, 2};
        o.padding = vad::Padding::Valid;
        results.push_back(check_graph(
            "conv2d_strided_valid", {x, k},
            [o](Tape& t, const std::vector<NodeId>& in) { return vad::conv2d(t, in[0], in[1], o); },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({1, 8, 8, 1}, rng);
        Tensor k = oracle::rand_tensor({3, 3, 1, 2}, rng);
        vad::Conv2dOpts o;
        o.dilation = {2, 2};
        results.push_back(check_graph(
            "conv2d_dilated", {x, k},
            [o](Tape& t, const std::vector<NodeId>& in) { return vad::conv2d(t, in[0], in[1], o); },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({1, 4, 5, 6, 2}, rng);
        Tensor k = oracle::rand_tensor({3, 3, 3, 2, 2}, rng);
        vad::Conv3dOpts o;
        o.stride = {1, 2, 2};
        results.push_back(check_graph(
            "conv3d_strided", {x, k},
            [o](Tape& t, const std::vector<NodeId>& in) { return vad::conv3d(t, in[0], in[1], o); },
            rng));
    }
    {
        Tensor y = oracle::rand_tensor({1, 3, 4, 3}, rng);
        Tensor k = oracle::rand_tensor({3, 3, 2, 3}, rng);
        vad::Conv2dOpts o;
        o.stride = {2, 2};
        results.push_back(check_graph(
            "conv_transpose2d", {y, k},
            [o](Tape& t, const std::vector<NodeId>& in) {
                return vad::conv_transpose2d(t, in[0], in[1], o, {6, 8});
            },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({1, 3, 4, 5, 2}, rng);
        Tensor w1 = oracle::rand_tensor({3, 3, 3, 2, 2}, rng, -0.4f, 0.4f);
        Tensor b1 = oracle::rand_tensor({2}, rng, -0.1f, 0.1f);
        Tensor w2 = oracle::rand_tensor({3, 3, 3, 2, 2}, rng, -0.4f, 0.4f);
        Tensor b2 = oracle::rand_tensor({2}, rng, -0.1f, 0.1f);
        results.push_back(check_graph(
            "residual_block_3d", {x, w1, b1, w2, b2},
            [](Tape& t, const std::vector<NodeId>& in) {
                return vad::residual_block_3d(t, in[0], in[1], in[2], in[3], in[4]);
            },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({1, 3, 4, 2}, rng);
        Tensor k = oracle::rand_tensor({3, 3, 2, 2}, rng);
        results.push_back(check_graph(
            "upsample_conv", {x, k},
            [](Tape& t, const std::vector<NodeId>& in) {
                return vad::conv2d(t, vad::upsample_nearest2d(t, in[0], 2), in[1]);
            },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({3, 6}, rng);
        Tensor w = oracle::rand_tensor({6, 4}, rng);
        Tensor b = oracle::rand_tensor({4}, rng);
        results.push_back(check_graph(
            "dense_bias", {x, w, b},
            [](Tape& t, const std::vector<NodeId>& in) {
                return vad::bias_add(t, vad::dense(t, in[0], in[1]), in[2]);
            },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({2, 3, 4, 2}, rng, -2.0f, 2.0f);
        results.push_back(check_graph(
            "sigmoid", {x},
            [](Tape& t, const std::vector<NodeId>& in) { return vad::sigmoid(t, in[0]); }, rng));
    }
    {
        // keep activations away from the kink at 0 so central differences
        // remain two-sided consistent
        Tensor x = oracle::rand_tensor({2, 3, 4, 2}, rng, 0.05f, 2.0f);
        for (std::size_t i = 0; i < x.data.size(); i += 2) x.data[i] = -x.data[i];
        results.push_back(check_graph(
            "leaky_relu", {x},
            [](Tape& t, const std::vector<NodeId>& in) { return vad::leaky_relu(t, in[0], 0.2f); },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({2, 4, 4, 1}, rng);
        Tensor y = oracle::rand_tensor({2, 4, 4, 1}, rng);
        results.push_back(check_graph(
            "mse", {x, y},
            [](Tape& t, const std::vector<NodeId>& in) { return vad::mse(t, in[0], in[1]); }, rng));
    }
    {
        // probabilities produced through a sigmoid, as in the classifier head
        Tensor z = oracle::rand_tensor({6, 1}, rng, -2.0f, 2.0f);
        Tensor labels({6, 1});
        for (int i = 0; i < 6; ++i) labels.data[static_cast<std::size_t>(i)] = (i % 2) ? 1.0f : 0.0f;
        results.push_back(check_graph(
            "bce_sigmoid", {z},
            [labels](Tape& t, const std::vector<NodeId>& in) {
                const NodeId target = t.leaf(labels, false);
                return vad::bce(t, vad::sigmoid(t, in[0]), target);
            },
            rng));
    }
    {
        Tensor x = oracle::rand_tensor({2, 2, 3, 4, 3}, rng);
        results.push_back(check_graph(
            "global_avg_pool", {x},
            [](Tape& t, const std::vector<NodeId>& in) { return vad::global_avg_pool(t, in[0]); },
            rng));
    }
    return results;
}

}  // namespace fdh
