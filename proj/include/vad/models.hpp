#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vad/ops.hpp"
#include "vad/tape.hpp"
#include "vad/tensor.hpp"

namespace vad {

enum class ModelKind { TwoStreamRAE3D, TwoStreamCAE2D, SingleStreamCAE, SupervisedClassifier };

const char* kind_name(ModelKind k);
ModelKind parse_kind(const std::string& name);
int kind_streams(ModelKind k);  // 2 for the fused models, 1 otherwise

enum class LayerKind { Conv2d, Conv3d, ResBlock3d, UpNearest2d, UpNearest3d, Dense, GlobalAvgPool };
enum class Activation { None, LeakyRelu, Sigmoid };
enum class StreamRole { GrayEncoder, FlowEncoder, Fusion, GrayDecoder, FlowDecoder, Head };

struct LayerDesc {
    LayerKind kind = LayerKind::Conv2d;
    StreamRole role = StreamRole::GrayEncoder;
    std::string name;
    std::vector<int> kernel;    // 2 or 3 spatial extents
    std::vector<int> stride;
    std::vector<int> dilation;  // 2D convolutions only
    std::vector<int> upsample;  // nearest-neighbour factors
    int out_channels = 0;       // Dense: output units
    Activation act = Activation::LeakyRelu;
};

/// Declarative layer graph. Layers are ordered: gray encoder, flow encoder,
/// fusion, gray decoder, flow decoder, head. Two-stream kinds have exactly
/// one fusion layer and one decoder split point.
struct NetworkSpec {
    ModelKind kind = ModelKind::TwoStreamCAE2D;
    std::vector<LayerDesc> layers;
    int fusion_index = -1;
    int split_index = -1;

    std::vector<const LayerDesc*> with_role(StreamRole role) const;
};

void validate_spec(const NetworkSpec& spec);

/// Named parameter tensors in deterministic (build) order.
class ParameterStore {
  public:
    std::uint64_t seed = 0;

    void add(std::string name, Tensor t);
    bool has(const std::string& name) const;
    std::size_t index(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::int64_t total_parameters() const;

  private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

struct BuiltModel {
    NetworkSpec spec;
    ParameterStore params;
};

/// Constructs the reference architecture for `kind` with seeded Glorot-uniform
/// weights and zero biases.
BuiltModel build(ModelKind kind, std::uint64_t seed);

/// Tape leaves for every parameter, in store order.
struct ParamNodes {
    std::vector<NodeId> ids;
    NodeId of(const ParameterStore& store, const std::string& name) const {
        return ids.at(store.index(name));
    }
};
ParamNodes bind_params(Tape& t, const ParameterStore& store, bool requires_grad);

constexpr float kLeakySlope = 0.2f;

/// out = act(x + conv(act(conv(x)))) with 3x3x3 same-padded convolutions.
NodeId residual_block_3d(Tape& t, NodeId x, NodeId w1, NodeId b1, NodeId w2, NodeId b2,
                         float slope = kLeakySlope);

/// Channel-concatenates the two stream codes and mixes them with the fusion
/// layer's 1x1 convolution.
NodeId fuse_bottleneck(Tape& t, const NetworkSpec& spec, const ParameterStore& store,
                       const ParamNodes& nodes, NodeId z_gray, NodeId z_flow);

/// Both decoders read the same shared code.
std::pair<NodeId, NodeId> split_decoders(NodeId z_shared);

struct AutoencoderNodes {
    NodeId gray_hat = -1;
    NodeId flow_hat = -1;
    NodeId code = -1;
};

/// Wires the full autoencoder graph on an existing tape. flow_in is ignored
/// (-1) for the single-stream kind.
AutoencoderNodes forward_autoencoder_on_tape(Tape& t, const NetworkSpec& spec,
                                             const ParameterStore& store, const ParamNodes& nodes,
                                             NodeId gray_in, NodeId flow_in);

/// Encoder activations + classifier head; returns per-clip probability node
/// of shape (B,1).
NodeId classifier_on_tape(Tape& t, const NetworkSpec& spec, const ParameterStore& store,
                          const ParamNodes& nodes, NodeId gray_in);

/// Convenience forward pass without gradients. Pass flow for two-stream
/// kinds only; the stream count is checked against the model kind.
std::pair<Tensor, Tensor> forward_autoencoder(const NetworkSpec& spec, const ParameterStore& store,
                                              const Tensor& gray, const Tensor* flow);

/// Per-clip probability of the target behaviour, supervised kind only.
std::vector<float> classify(const NetworkSpec& spec, const ParameterStore& store,
                            const Tensor& gray);

// Checkpoint format: "VAE1" magic, u32 kind tag, u64 seed, u32 parameter
// count, then per parameter: u32 name length, name bytes, u32 rank, u32
// dims, little-endian float32 data. Round-trips byte-exactly.
void save_checkpoint(const std::string& path, ModelKind kind, const ParameterStore& store);
struct Checkpoint {
    ModelKind kind = ModelKind::TwoStreamCAE2D;
    ParameterStore params;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vad
