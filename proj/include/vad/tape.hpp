#pragma once

#include <functional>
#include <vector>

#include "vad/tensor.hpp"

namespace vad {

using NodeId = std::int32_t;

enum class OpKind {
    Leaf,
    Conv2d,
    Conv3d,
    ConvTranspose2d,
    Upsample2d,
    Upsample3d,
    LeakyRelu,
    Sigmoid,
    Add,
    BiasAdd,
    ConcatChannels,
    Reshape,
    Dense,
    GlobalAvgPool,
    Mse,
    Bce,
    Proj,
    Scale,
};

const char* op_name(OpKind k);

/// Reverse-mode tape. Nodes are appended in evaluation order, so ids are
/// already a topological order; backward() walks them once, back to front.
class Tape {
  public:
    struct Node {
        OpKind op = OpKind::Leaf;
        std::vector<NodeId> inputs;
        Tensor value;
        // Exact value for scalar-producing ops, kept alongside the float32
        // tensor so oracle tests are not limited by storage rounding.
        double scalar_hi = 0.0;
        bool has_scalar_hi = false;
        bool requires_grad = false;
        // Accumulates grad contributions into the node's inputs; reads
        // saved forward values through the tape by id.
        std::function<void(Tape&, const Tensor& upstream)> backward;
    };

    NodeId leaf(Tensor value, bool requires_grad);

    NodeId emit(OpKind op, std::vector<NodeId> inputs, Tensor value,
                std::function<void(Tape&, const Tensor&)> backward);

    const Tensor& value(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
    Node& node(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }
    const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }
    bool requires_grad(NodeId id) const { return node(id).requires_grad; }

    /// Scalar readback; prefers the high-precision value when the op stored one.
    double scalar(NodeId id) const;

    /// Runs reverse-mode accumulation from a scalar loss node.
    void backward(NodeId loss);

    /// Gradient of the last backward() pass w.r.t. node `id`. Nodes the loss
    /// never reached get a zero tensor of the node's shape.
    Tensor grad(NodeId id) const;

    /// Adds `delta` into the gradient slot of `id` (used by op backward fns).
    void accumulate_grad(NodeId id, const Tensor& delta);
    void accumulate_grad(NodeId id, Tensor&& delta);
    const Tensor* raw_grad(NodeId id) const;

  private:
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    bool ran_backward_ = false;
};

}  // namespace vad
