#include "vad/models.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace vad {

const char* kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::TwoStreamRAE3D: return "two_stream_rae3d";
        case ModelKind::TwoStreamCAE2D: return "two_stream_cae2d";
        case ModelKind::SingleStreamCAE: return "single_stream_cae";
        case ModelKind::SupervisedClassifier: return "supervised_classifier";
    }
    return "?";
}

ModelKind parse_kind(const std::string& name) {
    for (ModelKind k : {ModelKind::TwoStreamRAE3D, ModelKind::TwoStreamCAE2D,
                        ModelKind::SingleStreamCAE, ModelKind::SupervisedClassifier})
        if (name == kind_name(k)) return k;
    throw std::invalid_argument("unknown model kind '" + name + "'");
}

int kind_streams(ModelKind k) {
    return (k == ModelKind::TwoStreamRAE3D || k == ModelKind::TwoStreamCAE2D) ? 2 : 1;
}

std::vector<const LayerDesc*> NetworkSpec::with_role(StreamRole role) const {
    std::vector<const LayerDesc*> out;
    for (const auto& l : layers)
        if (l.role == role) out.push_back(&l);
    return out;
}

// ---- parameter store -----------------------------------------------------

void ParameterStore::add(std::string name, Tensor t) {
    if (has(name)) throw std::invalid_argument("duplicate parameter name " + name);
    entries_.emplace_back(std::move(name), std::move(t));
}

bool ParameterStore::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.first == name) return true;
    return false;
}

std::size_t ParameterStore::index(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first == name) return i;
    throw std::out_of_range("no parameter named " + name);
}

Tensor& ParameterStore::at(const std::string& name) { return entries_[index(name)].second; }
const Tensor& ParameterStore::at(const std::string& name) const {
    return entries_[index(name)].second;
}

std::int64_t ParameterStore::total_parameters() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.second.numel();
    return n;
}

// ---- spec construction ----------------------------------------------------

namespace {

LayerDesc conv2_desc(std::string name, StreamRole role, int k, int s, int dil, int ch, Activation act) {
    LayerDesc d;
    d.kind = LayerKind::Conv2d;
    d.role = role;
    d.name = std::move(name);
    d.kernel = {k, k};
    d.stride = {s, s};
    d.dilation = {dil, dil};
    d.out_channels = ch;
    d.act = act;
    return d;
}

LayerDesc conv3_desc(std::string name, StreamRole role, std::vector<int> stride, int ch,
                     Activation act, std::vector<int> kernel = {3, 3, 3}) {
    LayerDesc d;
    d.kind = LayerKind::Conv3d;
    d.role = role;
    d.name = std::move(name);
    d.kernel = std::move(kernel);
    d.stride = std::move(stride);
    d.out_channels = ch;
    d.act = act;
    return d;
}

LayerDesc res3_desc(std::string name, StreamRole role, int ch) {
    LayerDesc d;
    d.kind = LayerKind::ResBlock3d;
    d.role = role;
    d.name = std::move(name);
    d.kernel = {3, 3, 3};
    d.stride = {1, 1, 1};
    d.out_channels = ch;
    d.act = Activation::LeakyRelu;
    return d;
}

LayerDesc up2_desc(std::string name, StreamRole role, int f) {
    LayerDesc d;
    d.kind = LayerKind::UpNearest2d;
    d.role = role;
    d.name = std::move(name);
    d.upsample = {f, f};
    d.act = Activation::None;
    return d;
}

LayerDesc up3_desc(std::string name, StreamRole role, int ft, int fh, int fw) {
    LayerDesc d;
    d.kind = LayerKind::UpNearest3d;
    d.role = role;
    d.name = std::move(name);
    d.upsample = {ft, fh, fw};
    d.act = Activation::None;
    return d;
}

LayerDesc dense_desc(std::string name, StreamRole role, int units, Activation act) {
    LayerDesc d;
    d.kind = LayerKind::Dense;
    d.role = role;
    d.name = std::move(name);
    d.out_channels = units;
    d.act = act;
    return d;
}

LayerDesc gap_desc(std::string name, StreamRole role) {
    LayerDesc d;
    d.kind = LayerKind::GlobalAvgPool;
    d.role = role;
    d.name = std::move(name);
    d.act = Activation::None;
    return d;
}

void append_cae_encoder(NetworkSpec& spec, const std::string& prefix, StreamRole role) {
    spec.layers.push_back(conv2_desc(prefix + "/c1", role, 3, 2, 1, 32, Activation::LeakyRelu));
    spec.layers.push_back(conv2_desc(prefix + "/c2", role, 5, 2, 1, 64, Activation::LeakyRelu));
    spec.layers.push_back(conv2_desc(prefix + "/c3", role, 3, 1, 2, 64, Activation::LeakyRelu));
    spec.layers.push_back(conv2_desc(prefix + "/c4", role, 3, 1, 2, 64, Activation::LeakyRelu));
}

void append_cae_decoder(NetworkSpec& spec, const std::string& prefix, StreamRole role, int out_ch) {
    spec.layers.push_back(conv2_desc(prefix + "/d1", role, 3, 1, 1, 64, Activation::LeakyRelu));
    spec.layers.push_back(conv2_desc(prefix + "/d2", role, 3, 1, 1, 64, Activation::LeakyRelu));
    spec.layers.push_back(up2_desc(prefix + "/up1", role, 2));
    spec.layers.push_back(conv2_desc(prefix + "/d3", role, 5, 1, 1, 32, Activation::LeakyRelu));
    spec.layers.push_back(up2_desc(prefix + "/up2", role, 2));
    spec.layers.push_back(conv2_desc(prefix + "/head", role, 3, 1, 1, out_ch, Activation::Sigmoid));
}

void append_rae_encoder(NetworkSpec& spec, const std::string& prefix, StreamRole role) {
    spec.layers.push_back(conv3_desc(prefix + "/c1", role, {1, 2, 2}, 32, Activation::LeakyRelu));
    spec.layers.push_back(res3_desc(prefix + "/r1", role, 32));
    spec.layers.push_back(conv3_desc(prefix + "/c2", role, {2, 2, 2}, 64, Activation::LeakyRelu));
    spec.layers.push_back(res3_desc(prefix + "/r2", role, 64));
}

void append_rae_decoder(NetworkSpec& spec, const std::string& prefix, StreamRole role, int out_ch) {
    spec.layers.push_back(res3_desc(prefix + "/r1", role, 64));
    spec.layers.push_back(up3_desc(prefix + "/up1", role, 2, 2, 2));
    spec.layers.push_back(conv3_desc(prefix + "/c1", role, {1, 1, 1}, 32, Activation::LeakyRelu));
    spec.layers.push_back(res3_desc(prefix + "/r2", role, 32));
    spec.layers.push_back(up3_desc(prefix + "/up2", role, 1, 2, 2));
    spec.layers.push_back(conv3_desc(prefix + "/c2", role, {1, 1, 1}, 16, Activation::LeakyRelu));
    spec.layers.push_back(
        conv3_desc(prefix + "/head", role, {1, 1, 1}, out_ch, Activation::Sigmoid));
}

NetworkSpec make_spec(ModelKind kind) {
    NetworkSpec spec;
    spec.kind = kind;
    switch (kind) {
        case ModelKind::TwoStreamCAE2D:
            append_cae_encoder(spec, "enc_gray", StreamRole::GrayEncoder);
            append_cae_encoder(spec, "enc_flow", StreamRole::FlowEncoder);
            spec.fusion_index = static_cast<int>(spec.layers.size());
            spec.layers.push_back(
                conv2_desc("fuse/mix", StreamRole::Fusion, 1, 1, 1, 64, Activation::LeakyRelu));
            spec.split_index = static_cast<int>(spec.layers.size());
            append_cae_decoder(spec, "dec_gray", StreamRole::GrayDecoder, 1);
            append_cae_decoder(spec, "dec_flow", StreamRole::FlowDecoder, 2);
            break;
        case ModelKind::TwoStreamRAE3D:
            append_rae_encoder(spec, "enc_gray", StreamRole::GrayEncoder);
            append_rae_encoder(spec, "enc_flow", StreamRole::FlowEncoder);
            spec.fusion_index = static_cast<int>(spec.layers.size());
            spec.layers.push_back(conv3_desc("fuse/mix", StreamRole::Fusion, {1, 1, 1}, 64,
                                             Activation::LeakyRelu, {1, 1, 1}));
            spec.split_index = static_cast<int>(spec.layers.size());
            append_rae_decoder(spec, "dec_gray", StreamRole::GrayDecoder, 1);
            append_rae_decoder(spec, "dec_flow", StreamRole::FlowDecoder, 2);
            break;
        case ModelKind::SingleStreamCAE:
            append_cae_encoder(spec, "enc_gray", StreamRole::GrayEncoder);
            append_cae_decoder(spec, "dec_gray", StreamRole::GrayDecoder, 1);
            break;
        case ModelKind::SupervisedClassifier:
            append_cae_encoder(spec, "enc_gray", StreamRole::GrayEncoder);
            spec.layers.push_back(gap_desc("cls/gap", StreamRole::Head));
            spec.layers.push_back(dense_desc("cls/fc1", StreamRole::Head, 64, Activation::LeakyRelu));
            spec.layers.push_back(dense_desc("cls/fc2", StreamRole::Head, 1, Activation::Sigmoid));
            break;
    }
    return spec;
}

// ---- shape inference (validation + parameter sizing) ----------------------

std::vector<int> infer_layer_shape(const LayerDesc& l, const std::vector<int>& in) {
    switch (l.kind) {
        case LayerKind::Conv2d: {
            // rank-5 inputs are handled time-distributed
            const bool td = in.size() == 5;
            const int h = td ? in[2] : in[1];
            const int w = td ? in[3] : in[2];
            const AxisGeom gh = conv_axis_geom(h, l.kernel[0], l.stride[0], l.dilation[0], Padding::Same);
            const AxisGeom gw = conv_axis_geom(w, l.kernel[1], l.stride[1], l.dilation[1], Padding::Same);
            if (td) return {in[0], in[1], gh.out, gw.out, l.out_channels};
            return {in[0], gh.out, gw.out, l.out_channels};
        }
        case LayerKind::Conv3d: {
            const AxisGeom gt = conv_axis_geom(in[1], l.kernel[0], l.stride[0], 1, Padding::Same);
            const AxisGeom gh = conv_axis_geom(in[2], l.kernel[1], l.stride[1], 1, Padding::Same);
            const AxisGeom gw = conv_axis_geom(in[3], l.kernel[2], l.stride[2], 1, Padding::Same);
            return {in[0], gt.out, gh.out, gw.out, l.out_channels};
        }
        case LayerKind::ResBlock3d:
            return in;  // channel-preserving by construction
        case LayerKind::UpNearest2d: {
            const bool td = in.size() == 5;
            if (td) return {in[0], in[1], in[2] * l.upsample[0], in[3] * l.upsample[1], in[4]};
            return {in[0], in[1] * l.upsample[0], in[2] * l.upsample[1], in[3]};
        }
        case LayerKind::UpNearest3d:
            return {in[0], in[1] * l.upsample[0], in[2] * l.upsample[1], in[3] * l.upsample[2],
                    in[4]};
        case LayerKind::Dense:
            return {in[0], l.out_channels};
        case LayerKind::GlobalAvgPool:
            return {in[0], in.back()};
    }
    throw std::logic_error("infer_layer_shape: unhandled layer kind");
}

std::vector<int> infer_chain(const std::vector<const LayerDesc*>& layers, std::vector<int> shape) {
    for (const LayerDesc* l : layers) shape = infer_layer_shape(*l, shape);
    return shape;
}

int channels_of(const std::vector<int>& shape) { return shape.back(); }

}  // namespace

void validate_spec(const NetworkSpec& spec) {
    const int n_fusion = static_cast<int>(spec.with_role(StreamRole::Fusion).size());
    if (kind_streams(spec.kind) == 2) {
        if (n_fusion != 1 || spec.fusion_index < 0 || spec.split_index < 0)
            throw std::logic_error("two-stream spec needs exactly one fusion and one split point");
    } else if (n_fusion != 0 || spec.fusion_index != -1 || spec.split_index != -1) {
        throw std::logic_error("single-stream spec must not carry fusion/split points");
    }

    const std::vector<int> gray_in{1, 8, 24, 32, 1};
    const auto z_gray = infer_chain(spec.with_role(StreamRole::GrayEncoder), gray_in);
    if (spec.kind == ModelKind::SupervisedClassifier) return;

    std::vector<int> code = z_gray;
    if (kind_streams(spec.kind) == 2) {
        const auto z_flow = infer_chain(spec.with_role(StreamRole::FlowEncoder), {1, 8, 24, 32, 2});
        if (std::vector<int>(z_gray.begin(), z_gray.end() - 1) !=
            std::vector<int>(z_flow.begin(), z_flow.end() - 1))
            throw std::logic_error("stream codes disagree on spatial/temporal shape");
        std::vector<int> cat = z_gray;
        cat.back() += z_flow.back();
        code = infer_layer_shape(spec.layers[static_cast<std::size_t>(spec.fusion_index)], cat);
    }
    // encoder output must line up with what the decoders consume
    if (std::vector<int>(code.begin(), code.end() - 1) !=
        std::vector<int>(z_gray.begin(), z_gray.end() - 1))
        throw std::logic_error("shared code changes the encoder's spatial/temporal shape");

    const auto gray_out = infer_chain(spec.with_role(StreamRole::GrayDecoder), code);
    if (gray_out != gray_in) throw std::logic_error("gray decoder does not mirror the input shape");
    if (kind_streams(spec.kind) == 2) {
        const auto flow_out = infer_chain(spec.with_role(StreamRole::FlowDecoder), code);
        if (flow_out != std::vector<int>{1, 8, 24, 32, 2})
            throw std::logic_error("flow decoder does not mirror the input shape");
    }
}

// ---- initialization --------------------------------------------------------

namespace {

Tensor glorot_uniform(std::vector<int> shape, std::int64_t fan_in, std::int64_t fan_out,
                      std::mt19937_64& rng) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    return Tensor::uniform(std::move(shape), -limit, limit, rng);
}

void init_layer_params(const LayerDesc& l, int in_ch, ParameterStore& store, std::mt19937_64& rng) {
    switch (l.kind) {
        case LayerKind::Conv2d: {
            const std::int64_t rf = static_cast<std::int64_t>(l.kernel[0]) * l.kernel[1];
            store.add(l.name + "/w", glorot_uniform({l.kernel[0], l.kernel[1], in_ch, l.out_channels},
                                                    rf * in_ch, rf * l.out_channels, rng));
            store.add(l.name + "/b", Tensor::zeros({l.out_channels}));
            break;
        }
        case LayerKind::Conv3d: {
            const std::int64_t rf =
                static_cast<std::int64_t>(l.kernel[0]) * l.kernel[1] * l.kernel[2];
            store.add(l.name + "/w",
                      glorot_uniform({l.kernel[0], l.kernel[1], l.kernel[2], in_ch, l.out_channels},
                                     rf * in_ch, rf * l.out_channels, rng));
            store.add(l.name + "/b", Tensor::zeros({l.out_channels}));
            break;
        }
        case LayerKind::ResBlock3d: {
            const int c = l.out_channels;
            const std::int64_t rf = 27;
            store.add(l.name + "/w1", glorot_uniform({3, 3, 3, c, c}, rf * c, rf * c, rng));
            store.add(l.name + "/b1", Tensor::zeros({c}));
            store.add(l.name + "/w2", glorot_uniform({3, 3, 3, c, c}, rf * c, rf * c, rng));
            store.add(l.name + "/b2", Tensor::zeros({c}));
            break;
        }
        case LayerKind::Dense:
            store.add(l.name + "/w", glorot_uniform({in_ch, l.out_channels}, in_ch, l.out_channels, rng));
            store.add(l.name + "/b", Tensor::zeros({l.out_channels}));
            break;
        case LayerKind::UpNearest2d:
        case LayerKind::UpNearest3d:
        case LayerKind::GlobalAvgPool:
            break;  // no parameters
    }
}

// Walks one role chain tracking channel counts, creating parameters in order.
void init_chain(const NetworkSpec& spec, StreamRole role, std::vector<int> shape,
                ParameterStore& store, std::mt19937_64& rng) {
    for (const LayerDesc* l : spec.with_role(role)) {
        init_layer_params(*l, channels_of(shape), store, rng);
        shape = infer_layer_shape(*l, shape);
    }
}

}  // namespace

BuiltModel build(ModelKind kind, std::uint64_t seed) {
    BuiltModel m;
    m.spec = make_spec(kind);
    validate_spec(m.spec);
    m.params.seed = seed;
    std::mt19937_64 rng(seed);

    const std::vector<int> gray_in{1, 8, 24, 32, 1};
    init_chain(m.spec, StreamRole::GrayEncoder, gray_in, m.params, rng);
    const auto z_gray = infer_chain(m.spec.with_role(StreamRole::GrayEncoder), gray_in);

    std::vector<int> code = z_gray;
    if (kind_streams(kind) == 2) {
        init_chain(m.spec, StreamRole::FlowEncoder, {1, 8, 24, 32, 2}, m.params, rng);
        std::vector<int> cat = z_gray;
        cat.back() *= 2;
        const LayerDesc& fuse = m.spec.layers[static_cast<std::size_t>(m.spec.fusion_index)];
        init_layer_params(fuse, channels_of(cat), m.params, rng);
        code = infer_layer_shape(fuse, cat);
    }
    init_chain(m.spec, StreamRole::GrayDecoder, code, m.params, rng);
    if (kind_streams(kind) == 2) init_chain(m.spec, StreamRole::FlowDecoder, code, m.params, rng);
    if (kind == ModelKind::SupervisedClassifier)
        init_chain(m.spec, StreamRole::Head, z_gray, m.params, rng);
    return m;
}

// ---- tape wiring -----------------------------------------------------------

ParamNodes bind_params(Tape& t, const ParameterStore& store, bool requires_grad) {
    ParamNodes nodes;
    nodes.ids.reserve(store.size());
    for (const auto& e : store.entries()) nodes.ids.push_back(t.leaf(e.second, requires_grad));
    return nodes;
}

namespace {

NodeId activate(Tape& t, NodeId x, Activation act) {
    switch (act) {
        case Activation::None: return x;
        case Activation::LeakyRelu: return leaky_relu(t, x, kLeakySlope);
        case Activation::Sigmoid: return sigmoid(t, x);
    }
    return x;
}

NodeId apply_layer(Tape& t, const LayerDesc& l, const ParameterStore& store,
                   const ParamNodes& nodes, NodeId x) {
    switch (l.kind) {
        case LayerKind::Conv2d: {
            const std::vector<int> in = t.value(x).shape;
            const bool td = in.size() == 5;
            NodeId h = x;
            if (td) h = reshape(t, h, {in[0] * in[1], in[2], in[3], in[4]});
            Conv2dOpts o;
            o.stride = {l.stride[0], l.stride[1]};
            o.dilation = {l.dilation[0], l.dilation[1]};
            h = conv2d(t, h, nodes.of(store, l.name + "/w"), o);
            h = bias_add(t, h, nodes.of(store, l.name + "/b"));
            h = activate(t, h, l.act);
            if (td) {
                const auto& hs = t.value(h).shape;
                h = reshape(t, h, {in[0], in[1], hs[1], hs[2], hs[3]});
            }
            return h;
        }
        case LayerKind::Conv3d: {
            Conv3dOpts o;
            o.stride = {l.stride[0], l.stride[1], l.stride[2]};
            NodeId h = conv3d(t, x, nodes.of(store, l.name + "/w"), o);
            h = bias_add(t, h, nodes.of(store, l.name + "/b"));
            return activate(t, h, l.act);
        }
        case LayerKind::ResBlock3d:
            return residual_block_3d(t, x, nodes.of(store, l.name + "/w1"),
                                     nodes.of(store, l.name + "/b1"),
                                     nodes.of(store, l.name + "/w2"),
                                     nodes.of(store, l.name + "/b2"));
        case LayerKind::UpNearest2d: {
            const std::vector<int> in = t.value(x).shape;
            const bool td = in.size() == 5;
            NodeId h = x;
            if (td) h = reshape(t, h, {in[0] * in[1], in[2], in[3], in[4]});
            h = upsample_nearest2d(t, h, l.upsample[0]);
            if (td) {
                const auto& hs = t.value(h).shape;
                h = reshape(t, h, {in[0], in[1], hs[1], hs[2], hs[3]});
            }
            return h;
        }
        case LayerKind::UpNearest3d:
            return upsample_nearest3d(t, x, l.upsample[0], l.upsample[1], l.upsample[2]);
        case LayerKind::Dense: {
            NodeId h = dense(t, x, nodes.of(store, l.name + "/w"));
            h = bias_add(t, h, nodes.of(store, l.name + "/b"));
            return activate(t, h, l.act);
        }
        case LayerKind::GlobalAvgPool:
            return global_avg_pool(t, x);
    }
    throw std::logic_error("apply_layer: unhandled layer kind");
}

NodeId apply_chain(Tape& t, const NetworkSpec& spec, StreamRole role, const ParameterStore& store,
                   const ParamNodes& nodes, NodeId x) {
    for (const LayerDesc* l : spec.with_role(role)) x = apply_layer(t, *l, store, nodes, x);
    return x;
}

}  // namespace

NodeId residual_block_3d(Tape& t, NodeId x, NodeId w1, NodeId b1, NodeId w2, NodeId b2,
                         float slope) {
    Conv3dOpts same;
    NodeId h = conv3d(t, x, w1, same);
    h = bias_add(t, h, b1);
    h = leaky_relu(t, h, slope);
    h = conv3d(t, h, w2, same);
    h = bias_add(t, h, b2);
    return leaky_relu(t, add(t, x, h), slope);
}

NodeId fuse_bottleneck(Tape& t, const NetworkSpec& spec, const ParameterStore& store,
                       const ParamNodes& nodes, NodeId z_gray, NodeId z_flow) {
    if (spec.fusion_index < 0) throw std::invalid_argument("fuse_bottleneck: spec has no fusion point");
    const NodeId cat = concat_channels(t, z_gray, z_flow);
    return apply_layer(t, spec.layers[static_cast<std::size_t>(spec.fusion_index)], store, nodes, cat);
}

std::pair<NodeId, NodeId> split_decoders(NodeId z_shared) { return {z_shared, z_shared}; }

AutoencoderNodes forward_autoencoder_on_tape(Tape& t, const NetworkSpec& spec,
                                             const ParameterStore& store, const ParamNodes& nodes,
                                             NodeId gray_in, NodeId flow_in) {
    if (spec.kind == ModelKind::SupervisedClassifier)
        throw std::invalid_argument("forward_autoencoder: supervised kind has no decoders");
    AutoencoderNodes out;
    const NodeId z_gray = apply_chain(t, spec, StreamRole::GrayEncoder, store, nodes, gray_in);
    if (kind_streams(spec.kind) == 2) {
        if (flow_in < 0)
            throw std::invalid_argument(std::string(kind_name(spec.kind)) +
                                        " expects 2 input streams, got 1");
        const NodeId z_flow = apply_chain(t, spec, StreamRole::FlowEncoder, store, nodes, flow_in);
        out.code = fuse_bottleneck(t, spec, store, nodes, z_gray, z_flow);
        const auto [dg, df] = split_decoders(out.code);
        out.gray_hat = apply_chain(t, spec, StreamRole::GrayDecoder, store, nodes, dg);
        out.flow_hat = apply_chain(t, spec, StreamRole::FlowDecoder, store, nodes, df);
    } else {
        if (flow_in >= 0)
            throw std::invalid_argument(std::string(kind_name(spec.kind)) +
                                        " expects 1 input stream, got 2");
        out.code = z_gray;
        out.gray_hat = apply_chain(t, spec, StreamRole::GrayDecoder, store, nodes, out.code);
    }
    return out;
}

NodeId classifier_on_tape(Tape& t, const NetworkSpec& spec, const ParameterStore& store,
                          const ParamNodes& nodes, NodeId gray_in) {
    if (spec.kind != ModelKind::SupervisedClassifier)
        throw std::invalid_argument("classifier_on_tape: kind is not supervised");
    const NodeId z = apply_chain(t, spec, StreamRole::GrayEncoder, store, nodes, gray_in);
    return apply_chain(t, spec, StreamRole::Head, store, nodes, z);
}

std::pair<Tensor, Tensor> forward_autoencoder(const NetworkSpec& spec, const ParameterStore& store,
                                              const Tensor& gray, const Tensor* flow) {
    const int want = kind_streams(spec.kind);
    if ((want == 2) != (flow != nullptr))
        throw std::invalid_argument(std::string(kind_name(spec.kind)) + " expects " +
                                    std::to_string(want) + " input stream(s)");
    Tape t;
    const ParamNodes nodes = bind_params(t, store, false);
    const NodeId g = t.leaf(gray, false);
    const NodeId f = flow ? t.leaf(*flow, false) : -1;
    const AutoencoderNodes out = forward_autoencoder_on_tape(t, spec, store, nodes, g, f);
    Tensor gray_hat = t.value(out.gray_hat);
    if (!gray_hat.same_shape(gray))
        throw std::logic_error("autoencoder output shape " + shape_str(gray_hat.shape) +
                               " does not match input " + shape_str(gray.shape));
    Tensor flow_hat;
    if (flow) {
        flow_hat = t.value(out.flow_hat);
        if (!flow_hat.same_shape(*flow))
            throw std::logic_error("flow reconstruction shape mismatch");
    }
    return {std::move(gray_hat), std::move(flow_hat)};
}

std::vector<float> classify(const NetworkSpec& spec, const ParameterStore& store,
                            const Tensor& gray) {
    Tape t;
    const ParamNodes nodes = bind_params(t, store, false);
    const NodeId g = t.leaf(gray, false);
    const NodeId p = classifier_on_tape(t, spec, store, nodes, g);
    const Tensor& pv = t.value(p);
    return std::vector<float>(pv.data.begin(), pv.data.end());
}

// ---- checkpoint io ---------------------------------------------------------

namespace {
template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("checkpoint: unexpected end of file");
    return v;
}
}  // namespace

void save_checkpoint(const std::string& path, ModelKind kind, const ParameterStore& store) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f.write("VAE1", 4);
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(kind));
    write_pod<std::uint64_t>(f, store.seed);
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, tensor] : store.entries()) {
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(tensor.rank()));
        for (int d : tensor.shape) write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(d));
        f.write(reinterpret_cast<const char*>(tensor.data.data()),
                static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error("save_checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "VAE1")
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    Checkpoint ck;
    const auto kind_tag = read_pod<std::uint32_t>(f);
    if (kind_tag > 3) throw std::runtime_error("load_checkpoint: unknown kind tag in " + path);
    ck.kind = static_cast<ModelKind>(kind_tag);
    ck.params.seed = read_pod<std::uint64_t>(f);
    const auto count = read_pod<std::uint32_t>(f);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const auto rank = read_pod<std::uint32_t>(f);
        if (!f || rank == 0 || rank > 8)
            throw std::runtime_error("load_checkpoint: corrupt tensor header in " + path);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(read_pod<std::uint32_t>(f));
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!f) throw std::runtime_error("load_checkpoint: truncated tensor data in " + path);
        ck.params.add(std::move(name), std::move(t));
    }
    return ck;
}

}  // namespace vad
