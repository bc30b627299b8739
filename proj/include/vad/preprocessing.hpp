#pragma once

#include <string>
#include <vector>

#include "vad/image.hpp"
#include "vad/optical_flow.hpp"
#include "vad/tensor.hpp"

namespace vad {

// The eight annotated behaviours.
enum class Behaviour { Drink, Eat, Groom, Hang, Rear, Rest, Micromovement, Walk };

const char* behaviour_name(Behaviour b);
Behaviour parse_behaviour(const std::string& name);

/// One label per source frame.
using AnnotationTrack = std::vector<Behaviour>;

struct LabelledInterval {
    int start = 0;  // inclusive
    int end = 0;    // exclusive
    Behaviour label = Behaviour::Walk;
};

/// Annotation file: one "start end label" line per interval, end exclusive.
/// Intervals must tile [0, frame_count) without overlap.
AnnotationTrack read_annotations(const std::string& path, int frame_count);
void write_annotations(const std::string& path, const std::vector<LabelledInterval>& intervals);
std::vector<LabelledInterval> track_to_intervals(const AnnotationTrack& track);

struct FrameSequence {
    std::vector<Image> frames;  // grayscale, [0,1]
    float fps = 25.0f;
    std::string source_id;
};

/// Frame directory layout: frame_%06d.pgm plus manifest.txt ("fps count").
FrameSequence load_frame_dir(const std::string& dir);
void save_frame_dir(const std::string& dir, const FrameSequence& seq);

struct PreprocessOptions {
    float gamma = 0.8f;
    float flow_max_disp = 4.0f;
    int subsample = 5;
    int clip_len = 8;
    FlowParams flow;
};

/// One preprocessed 8-frame window with both input streams.
struct Clip {
    int start_frame = 0;          // source index of the first sampled frame
    std::vector<int> frame_ids;   // source indices, one per clip frame
    Tensor gray;                  // (clip_len, 24, 32, 1), values in [0,1]
    Tensor flow;                  // (clip_len, 24, 32, 2), values in [0,1]
    bool anomalous = false;
};

/// Batched clips ready for a model pass.
struct ClipBatch {
    Tensor gray;                   // (B, clip_len, 24, 32, 1)
    Tensor flow;                   // (B, clip_len, 24, 32, 2)
    std::vector<float> labels;     // 1 = anomalous
    std::vector<int> start_frames;
};

// Index plans. Training: keep every `subsample`-th frame, then consecutive
// non-overlapping clip_len windows; sequences shorter than
// subsample*clip_len produce no clips. Test: consecutive non-overlapping
// windows over every frame.
std::vector<std::vector<int>> training_clip_indices(int frame_count, int subsample, int clip_len);
std::vector<std::vector<int>> test_clip_indices(int frame_count, int clip_len);

/// resize -> gamma, at the 32x32 working resolution
std::vector<Image> preprocess_frames(const FrameSequence& seq, const PreprocessOptions& opt);

/// Materializes clips for the given index windows: cropped gray stream plus
/// normalized flow stream, where frame t carries flow(t-1 -> t) and frame 0
/// of a video carries the neutral value 0.5.
std::vector<Clip> build_clips(const std::vector<Image>& processed,
                              const std::vector<std::vector<int>>& windows,
                              const PreprocessOptions& opt);

std::vector<Clip> build_training_clips(const FrameSequence& seq, const PreprocessOptions& opt);
std::vector<Clip> build_test_clips(const FrameSequence& seq, const PreprocessOptions& opt);

/// Drops every clip containing at least one frame of the target behaviour.
std::vector<Clip> filter_pseudo_anomaly(std::vector<Clip> clips, const AnnotationTrack& track,
                                        Behaviour target);

/// Marks clips anomalous iff any of their frames carries the target behaviour.
void label_clips(std::vector<Clip>& clips, const AnnotationTrack& track, Behaviour target);

/// Mirrors both streams along W; the flow u-channel is negated (reflected
/// around the neutral 0.5 in normalized units).
Clip hflip_augment(const Clip& clip);

struct ClipSplit {
    std::vector<Clip> train;
    std::vector<Clip> val;
};

/// Seeded shuffle, then floor((1-val_fraction)*n) clips for training.
ClipSplit split_clips(std::vector<Clip> clips, float val_fraction, std::uint64_t seed);

ClipBatch make_batch(const std::vector<Clip>& clips, const std::vector<int>& indices);

}  // namespace vad
