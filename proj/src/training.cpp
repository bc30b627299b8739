#include "vad/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "vad/util.hpp"

namespace vad {

PreprocessOptions TrainConfig::preprocess() const {
    PreprocessOptions opt;
    opt.gamma = gamma;
    opt.flow_max_disp = flow_max_disp;
    return opt;
}

TrainConfig default_config(ModelKind kind) {
    TrainConfig c;
    c.kind = kind;
    switch (kind) {
        case ModelKind::TwoStreamRAE3D:
            c.epochs = 120;
            c.batch_size = 64;
            c.weights = {0.75f, 1.0f};
            break;
        case ModelKind::TwoStreamCAE2D:
        case ModelKind::SingleStreamCAE:
            c.epochs = 60;
            c.batch_size = 32;
            c.weights = {1.0f, 1.0f};
            break;
        case ModelKind::SupervisedClassifier:
            c.epochs = 120;
            c.batch_size = 32;
            c.optimizer = OptimizerKind::Sgd;
            c.lr = 5e-4f;
            break;
    }
    return c;
}

void validate_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs", "epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size", "batch_size must be >= 1");
    if (!(cfg.lr > 0.0f)) throw ConfigError("lr", "lr must be > 0");
    if (!(cfg.beta1 >= 0.0f && cfg.beta1 < 1.0f)) throw ConfigError("beta1", "beta1 must be in [0,1)");
    if (cfg.weights.w_image < 0.0f || cfg.weights.w_flow < 0.0f ||
        (cfg.weights.w_image == 0.0f && cfg.weights.w_flow == 0.0f))
        throw ConfigError("w_image/w_flow", "loss weights must be >= 0 and not both zero");
    if (!(cfg.val_fraction >= 0.0f && cfg.val_fraction < 1.0f))
        throw ConfigError("val_fraction", "val_fraction must be in [0,1)");
    if (!(cfg.gamma > 0.0f)) throw ConfigError("gamma", "gamma must be > 0");
    if (!(cfg.flow_max_disp > 0.0f)) throw ConfigError("flow_max_disp", "flow_max_disp must be > 0");
    if (cfg.data_dir.empty()) throw ConfigError("data", "data directory must be set");
}

TrainConfig config_from_toml(const TomlTable& t) {
    TrainConfig c;
    try {
        c = default_config(parse_kind(t.get_string("train.kind")));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("kind", e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError("kind", e.what());
    }
    c.data_dir = t.get_string_or("train.data", "");
    if (t.has("train.target")) {
        try {
            c.target = parse_behaviour(t.get_string("train.target"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("target", e.what());
        }
    }
    c.epochs = static_cast<int>(t.get_int_or("train.epochs", c.epochs));
    c.batch_size = static_cast<int>(t.get_int_or("train.batch_size", c.batch_size));
    c.lr = static_cast<float>(t.get_double_or("train.lr", c.lr));
    c.beta1 = static_cast<float>(t.get_double_or("train.beta1", c.beta1));
    c.weights.w_image = static_cast<float>(t.get_double_or("train.w_image", c.weights.w_image));
    c.weights.w_flow = static_cast<float>(t.get_double_or("train.w_flow", c.weights.w_flow));
    c.seed = static_cast<std::uint64_t>(t.get_int_or("train.seed", static_cast<std::int64_t>(c.seed)));
    c.val_fraction = static_cast<float>(t.get_double_or("train.val_fraction", c.val_fraction));
    c.gamma = static_cast<float>(t.get_double_or("train.gamma", c.gamma));
    c.flow_max_disp = static_cast<float>(t.get_double_or("train.flow_max_disp", c.flow_max_disp));
    if (t.has("train.optimizer")) {
        const std::string o = t.get_string("train.optimizer");
        if (o == "adam")
            c.optimizer = OptimizerKind::Adam;
        else if (o == "sgd")
            c.optimizer = OptimizerKind::Sgd;
        else
            throw ConfigError("optimizer", "optimizer must be 'adam' or 'sgd'");
    }
    validate_config(c);
    return c;
}

void write_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_train_log_csv: cannot open " + path);
    f << "epoch,train_loss,val_loss,img_loss,flow_loss,seconds\n";
    char line[200];
    for (const auto& e : log.epochs) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.3f\n", e.epoch, e.train_loss,
                      e.val_loss, e.img_loss, e.flow_loss, e.seconds);
        f << line;
    }
    if (!f) throw std::runtime_error("write_train_log_csv: short write to " + path);
}

BatchStep run_autoencoder_batch(const NetworkSpec& spec, const ParameterStore& store,
                                const ClipBatch& batch, const DualLossWeights& weights,
                                bool with_grads) {
    Tape t;
    const ParamNodes nodes = bind_params(t, store, with_grads);
    const NodeId gray_in = t.leaf(batch.gray, false);
    const bool two_stream = kind_streams(spec.kind) == 2;
    const NodeId flow_in = two_stream ? t.leaf(batch.flow, false) : -1;
    const AutoencoderNodes out = forward_autoencoder_on_tape(t, spec, store, nodes, gray_in, flow_in);

    BatchStep step;
    const NodeId l_img = mse(t, gray_in, out.gray_hat);
    step.img = t.scalar(l_img);
    NodeId loss = scale(t, l_img, weights.w_image);
    if (two_stream) {
        const NodeId l_flow = mse(t, flow_in, out.flow_hat);
        step.flow = t.scalar(l_flow);
        loss = add(t, loss, scale(t, l_flow, weights.w_flow));
    }
    step.total = t.scalar(loss);
    if (with_grads && std::isfinite(step.total)) {
        t.backward(loss);
        step.grads.reserve(nodes.ids.size());
        for (NodeId id : nodes.ids) step.grads.push_back(t.grad(id));
    }
    return step;
}

BatchStep run_classifier_batch(const NetworkSpec& spec, const ParameterStore& store,
                               const ClipBatch& batch, bool with_grads) {
    Tape t;
    const ParamNodes nodes = bind_params(t, store, with_grads);
    const NodeId gray_in = t.leaf(batch.gray, false);
    const NodeId probs = classifier_on_tape(t, spec, store, nodes, gray_in);
    Tensor labels({static_cast<int>(batch.labels.size()), 1},
                  std::vector<float>(batch.labels.begin(), batch.labels.end()));
    const NodeId target = t.leaf(std::move(labels), false);
    const NodeId loss = bce(t, probs, target);
    BatchStep step;
    step.total = t.scalar(loss);
    step.img = step.total;
    if (with_grads && std::isfinite(step.total)) {
        t.backward(loss);
        step.grads.reserve(nodes.ids.size());
        for (NodeId id : nodes.ids) step.grads.push_back(t.grad(id));
    }
    return step;
}

PreparedClips prepare_clips(const TrainConfig& cfg, const FrameSequence& seq,
                            const AnnotationTrack& track) {
    std::vector<Clip> clips = build_training_clips(seq, cfg.preprocess());
    label_clips(clips, track, cfg.target);
    if (cfg.kind != ModelKind::SupervisedClassifier)
        clips = filter_pseudo_anomaly(std::move(clips), track, cfg.target);
    ClipSplit split = split_clips(std::move(clips), cfg.val_fraction, cfg.seed);
    PreparedClips out;
    out.train = std::move(split.train);
    out.val = std::move(split.val);
    // flip augmentation doubles the training set; validation stays untouched
    const std::size_t n = out.train.size();
    out.train.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) out.train.push_back(hflip_augment(out.train[i]));
    return out;
}

namespace {

double eval_split_loss(const TrainConfig& cfg, const NetworkSpec& spec, const ParameterStore& store,
                       const std::vector<Clip>& clips) {
    if (clips.empty()) return 0.0;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t begin = 0; begin < clips.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end =
            std::min(clips.size(), begin + static_cast<std::size_t>(cfg.batch_size));
        std::vector<int> idx(end - begin);
        std::iota(idx.begin(), idx.end(), static_cast<int>(begin));
        const ClipBatch batch = make_batch(clips, idx);
        const BatchStep step =
            cfg.kind == ModelKind::SupervisedClassifier
                ? run_classifier_batch(spec, store, batch, false)
                : run_autoencoder_batch(spec, store, batch, cfg.weights, false);
        total += step.total * static_cast<double>(idx.size());
        count += idx.size();
    }
    return total / static_cast<double>(count);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::string& out_dir) {
    validate_config(cfg);
    std::filesystem::create_directories(out_dir);

    const FrameSequence seq = load_frame_dir(cfg.data_dir);
    const AnnotationTrack track =
        read_annotations(cfg.data_dir + "/annotations.txt", static_cast<int>(seq.frames.size()));
    PreparedClips data = prepare_clips(cfg, seq, track);
    if (data.train.empty())
        throw std::runtime_error("train: empty training set after filtering, nothing to learn from");
    if (cfg.kind != ModelKind::SupervisedClassifier)
        for (const Clip& c : data.train)
            if (c.anomalous)
                throw std::logic_error("train: target-behaviour clip leaked into the training set");

    BuiltModel model = build(cfg.kind, cfg.seed);
    std::vector<Tensor*> params;
    params.reserve(model.params.size());
    for (auto& e : model.params.entries()) params.push_back(&e.second);
    AdamState adam = AdamState::init(params, cfg.lr, cfg.beta1);

    TrainResult result;
    result.kind = cfg.kind;
    result.n_train_clips = data.train.size();
    result.n_val_clips = data.val.size();
    result.checkpoint_path = out_dir + "/checkpoint.vae1";

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<int> order(data.train.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(splitmix64(cfg.seed ^ (0xE70C4ULL + static_cast<std::uint64_t>(epoch))));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0, epoch_img = 0.0, epoch_flow = 0.0;
        std::size_t seen = 0;
        bool aborted = false;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
            const ClipBatch batch = make_batch(data.train, idx);
            const BatchStep step =
                cfg.kind == ModelKind::SupervisedClassifier
                    ? run_classifier_batch(model.spec, model.params, batch, true)
                    : run_autoencoder_batch(model.spec, model.params, batch, cfg.weights, true);
            if (!std::isfinite(step.total)) {
                aborted = true;
                break;
            }
            if (cfg.optimizer == OptimizerKind::Adam)
                adam_step(params, step.grads, adam);
            else
                sgd_step(params, step.grads, cfg.lr);
            epoch_loss += step.total * static_cast<double>(idx.size());
            epoch_img += step.img * static_cast<double>(idx.size());
            epoch_flow += step.flow * static_cast<double>(idx.size());
            seen += idx.size();
        }
        if (aborted) {
            result.status = TrainStatus::AbortedNonFinite;
            break;  // previous epoch's checkpoint stays on disk
        }
        const double val_loss = eval_split_loss(cfg, model.spec, model.params, data.val);
        if (!std::isfinite(val_loss)) {
            result.status = TrainStatus::AbortedNonFinite;
            break;
        }
        const auto t1 = std::chrono::steady_clock::now();
        EpochLog row;
        row.epoch = epoch;
        row.train_loss = epoch_loss / static_cast<double>(seen);
        row.val_loss = val_loss;
        row.img_loss = epoch_img / static_cast<double>(seen);
        row.flow_loss = epoch_flow / static_cast<double>(seen);
        row.seconds = std::chrono::duration<double>(t1 - t0).count();
        result.log.epochs.push_back(row);
        save_checkpoint(result.checkpoint_path, cfg.kind, model.params);
        result.params = model.params;
    }

    write_train_log_csv(out_dir + "/train_log.csv", result.log);
    if (result.log.epochs.empty() && result.status == TrainStatus::AbortedNonFinite)
        result.checkpoint_path.clear();  // nothing good was ever written
    return result;
}

}  // namespace vad
