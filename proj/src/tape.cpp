#include "vad/tape.hpp"

#include <stdexcept>

namespace vad {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Conv2d: return "conv2d";
        case OpKind::Conv3d: return "conv3d";
        case OpKind::ConvTranspose2d: return "conv_transpose2d";
        case OpKind::Upsample2d: return "upsample2d";
        case OpKind::Upsample3d: return "upsample3d";
        case OpKind::LeakyRelu: return "leaky_relu";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Add: return "add";
        case OpKind::BiasAdd: return "bias_add";
        case OpKind::ConcatChannels: return "concat_channels";
        case OpKind::Reshape: return "reshape";
        case OpKind::Dense: return "dense";
        case OpKind::GlobalAvgPool: return "global_avg_pool";
        case OpKind::Mse: return "mse";
        case OpKind::Bce: return "bce";
        case OpKind::Proj: return "proj";
        case OpKind::Scale: return "scale";
    }
    return "?";
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::emit(OpKind op, std::vector<NodeId> inputs, Tensor value,
                  std::function<void(Tape&, const Tensor&)> backward) {
    const NodeId id = static_cast<NodeId>(nodes_.size());
    Node n;
    n.op = op;
    n.requires_grad = false;
    for (NodeId in : inputs) {
        if (in < 0 || in >= id) throw std::logic_error("tape input id out of order");
        n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(in)].requires_grad;
    }
    n.inputs = std::move(inputs);
    n.value = std::move(value);
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return id;
}

double Tape::scalar(NodeId id) const {
    const Node& n = node(id);
    if (n.value.numel() != 1) throw std::invalid_argument("scalar() on non-scalar node");
    return n.has_scalar_hi ? n.scalar_hi : static_cast<double>(n.value.data[0]);
}

void Tape::backward(NodeId loss) {
    const Node& ln = node(loss);
    if (ln.value.numel() != 1) throw std::invalid_argument("backward() requires a scalar loss node");
    grads_.assign(nodes_.size(), Tensor{});
    ran_backward_ = true;
    grads_[static_cast<std::size_t>(loss)] = Tensor::scalar(1.0f);
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        const Tensor& g = grads_[static_cast<std::size_t>(id)];
        if (g.data.empty() || !n.backward) continue;
        n.backward(*this, g);
    }
}

Tensor Tape::grad(NodeId id) const {
    if (!ran_backward_) throw std::logic_error("grad() before backward()");
    const Tensor& g = grads_.at(static_cast<std::size_t>(id));
    if (g.data.empty()) return Tensor::zeros(node(id).value.shape);
    return g;
}

const Tensor* Tape::raw_grad(NodeId id) const {
    const Tensor& g = grads_.at(static_cast<std::size_t>(id));
    return g.data.empty() ? nullptr : &g;
}

void Tape::accumulate_grad(NodeId id, const Tensor& delta) {
    Tensor& slot = grads_.at(static_cast<std::size_t>(id));
    if (slot.data.empty()) {
        slot = delta;
        return;
    }
    for (std::size_t i = 0; i < slot.data.size(); ++i) slot.data[i] += delta.data[i];
}

void Tape::accumulate_grad(NodeId id, Tensor&& delta) {
    Tensor& slot = grads_.at(static_cast<std::size_t>(id));
    if (slot.data.empty()) {
        slot = std::move(delta);
        return;
    }
    for (std::size_t i = 0; i < slot.data.size(); ++i) slot.data[i] += delta.data[i];
}

}  // namespace vad
