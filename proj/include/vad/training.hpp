#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vad/evaluation.hpp"
#include "vad/models.hpp"
#include "vad/optimizer.hpp"
#include "vad/preprocessing.hpp"
#include "vad/toml_lite.hpp"

namespace vad {

/// Thrown when a config value is out of range; carries the offending field.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string f, const std::string& msg)
        : std::runtime_error(msg), field(std::move(f)) {}
};

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
    ModelKind kind = ModelKind::TwoStreamCAE2D;
    int epochs = 60;
    int batch_size = 32;
    float lr = 2e-4f;
    float beta1 = 0.5f;
    OptimizerKind optimizer = OptimizerKind::Adam;
    DualLossWeights weights;
    std::uint64_t seed = 17;
    Behaviour target = Behaviour::Hang;
    std::string data_dir;
    float val_fraction = 0.2f;
    float gamma = 0.8f;
    float flow_max_disp = 4.0f;

    PreprocessOptions preprocess() const;
};

/// Per-kind defaults: RAE 120 epochs / batch 64 / weights 0.75:1.0, CAE (and
/// the single-stream variant) 60 epochs / batch 32 / weights 1.0:1.0, both
/// Adam lr 2e-4 beta1 0.5; the supervised head trains 120 epochs with SGD at
/// lr 5e-4.
TrainConfig default_config(ModelKind kind);

/// Reads the [train] section; unspecified fields take the kind defaults.
TrainConfig config_from_toml(const TomlTable& toml);
void validate_config(const TrainConfig& cfg);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double img_loss = 0.0;
    double flow_loss = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
};

void write_train_log_csv(const std::string& path, const TrainLog& log);

enum class TrainStatus { Completed, AbortedNonFinite };

struct TrainResult {
    TrainStatus status = TrainStatus::Completed;
    TrainLog log;
    ModelKind kind = ModelKind::TwoStreamCAE2D;
    ParameterStore params;  // parameters at the last completed epoch
    std::string checkpoint_path;
    std::size_t n_train_clips = 0;
    std::size_t n_val_clips = 0;
};

/// One forward/backward pass over a batch. Gradients come back in parameter
/// store order when with_grads is set.
struct BatchStep {
    double total = 0.0;
    double img = 0.0;
    double flow = 0.0;
    std::vector<Tensor> grads;
};

BatchStep run_autoencoder_batch(const NetworkSpec& spec, const ParameterStore& store,
                                const ClipBatch& batch, const DualLossWeights& weights,
                                bool with_grads);
BatchStep run_classifier_batch(const NetworkSpec& spec, const ParameterStore& store,
                               const ClipBatch& batch, bool with_grads);

/// Full training run: loads the frame directory and annotations under
/// cfg.data_dir, builds filtered/augmented clips, trains, and writes
/// checkpoint.vae1 plus train_log.csv under out_dir.
TrainResult train(const TrainConfig& cfg, const std::string& out_dir);

/// The clip preparation stage of train(), exposed for tests: preprocessed,
/// labelled, filtered (for unsupervised kinds), split and augmented.
struct PreparedClips {
    std::vector<Clip> train;
    std::vector<Clip> val;
};
PreparedClips prepare_clips(const TrainConfig& cfg, const FrameSequence& seq,
                            const AnnotationTrack& track);

}  // namespace vad
