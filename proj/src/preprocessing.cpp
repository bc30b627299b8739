#include "vad/preprocessing.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace vad {

namespace {
constexpr std::array<const char*, 8> kBehaviourNames = {
    "drink", "eat", "groom", "hang", "rear", "rest", "micromovement", "walk"};
}

const char* behaviour_name(Behaviour b) { return kBehaviourNames[static_cast<std::size_t>(b)]; }

Behaviour parse_behaviour(const std::string& name) {
    for (std::size_t i = 0; i < kBehaviourNames.size(); ++i)
        if (name == kBehaviourNames[i]) return static_cast<Behaviour>(i);
    throw std::invalid_argument("unknown behaviour label '" + name + "'");
}

AnnotationTrack read_annotations(const std::string& path, int frame_count) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_annotations: cannot open " + path);
    std::vector<bool> covered(static_cast<std::size_t>(frame_count), false);
    AnnotationTrack track(static_cast<std::size_t>(frame_count), Behaviour::Walk);
    int start = 0, end = 0;
    std::string label;
    while (f >> start >> end >> label) {
        if (start < 0 || end > frame_count || start >= end)
            throw std::runtime_error("read_annotations: bad interval [" + std::to_string(start) +
                                     "," + std::to_string(end) + ") in " + path);
        const Behaviour b = parse_behaviour(label);
        for (int i = start; i < end; ++i) {
            if (covered[static_cast<std::size_t>(i)])
                throw std::runtime_error("read_annotations: frame " + std::to_string(i) +
                                         " labelled twice in " + path);
            covered[static_cast<std::size_t>(i)] = true;
            track[static_cast<std::size_t>(i)] = b;
        }
    }
    for (int i = 0; i < frame_count; ++i)
        if (!covered[static_cast<std::size_t>(i)])
            throw std::runtime_error("read_annotations: frame " + std::to_string(i) +
                                     " has no label in " + path);
    return track;
}

void write_annotations(const std::string& path, const std::vector<LabelledInterval>& intervals) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_annotations: cannot open " + path);
    for (const auto& iv : intervals)
        f << iv.start << " " << iv.end << " " << behaviour_name(iv.label) << "\n";
    if (!f) throw std::runtime_error("write_annotations: short write to " + path);
}

std::vector<LabelledInterval> track_to_intervals(const AnnotationTrack& track) {
    std::vector<LabelledInterval> out;
    const int n = static_cast<int>(track.size());
    int start = 0;
    for (int i = 1; i <= n; ++i) {
        if (i == n || track[static_cast<std::size_t>(i)] != track[static_cast<std::size_t>(start)]) {
            out.push_back({start, i, track[static_cast<std::size_t>(start)]});
            start = i;
        }
    }
    return out;
}

FrameSequence load_frame_dir(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.txt");
    if (!mf) throw std::runtime_error("load_frame_dir: missing manifest.txt in " + dir);
    float fps = 0.0f;
    int count = 0;
    if (!(mf >> fps >> count) || count <= 0 || fps <= 0.0f)
        throw std::runtime_error("load_frame_dir: malformed manifest in " + dir);
    FrameSequence seq;
    seq.fps = fps;
    seq.source_id = dir;
    seq.frames.reserve(static_cast<std::size_t>(count));
    char name[64];
    for (int i = 0; i < count; ++i) {
        std::snprintf(name, sizeof(name), "frame_%06d.pgm", i);
        seq.frames.push_back(read_pgm(dir + "/" + name));
        if (seq.frames.back().h != seq.frames.front().h ||
            seq.frames.back().w != seq.frames.front().w)
            throw std::runtime_error("load_frame_dir: frame size changes at index " +
                                     std::to_string(i));
    }
    return seq;
}

void save_frame_dir(const std::string& dir, const FrameSequence& seq) {
    std::filesystem::create_directories(dir);
    char name[64];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "frame_%06zu.pgm", i);
        write_pgm(dir + "/" + name, seq.frames[i]);
    }
    std::ofstream mf(dir + "/manifest.txt");
    mf << seq.fps << " " << seq.frames.size() << "\n";
    if (!mf) throw std::runtime_error("save_frame_dir: cannot write manifest in " + dir);
}

std::vector<std::vector<int>> training_clip_indices(int frame_count, int subsample, int clip_len) {
    if (subsample < 1 || clip_len < 1)
        throw std::invalid_argument("training_clip_indices: subsample and clip_len must be >= 1");
    std::vector<std::vector<int>> clips;
    if (frame_count < subsample * clip_len) return clips;  // too short, empty result
    std::vector<int> sampled;
    for (int i = 0; i < frame_count; i += subsample) sampled.push_back(i);
    const int n_clips = static_cast<int>(sampled.size()) / clip_len;
    clips.reserve(static_cast<std::size_t>(n_clips));
    for (int c = 0; c < n_clips; ++c)
        clips.emplace_back(sampled.begin() + static_cast<std::ptrdiff_t>(c) * clip_len,
                           sampled.begin() + static_cast<std::ptrdiff_t>(c + 1) * clip_len);
    return clips;
}

std::vector<std::vector<int>> test_clip_indices(int frame_count, int clip_len) {
    if (clip_len < 1) throw std::invalid_argument("test_clip_indices: clip_len must be >= 1");
    std::vector<std::vector<int>> clips;
    const int n_clips = frame_count / clip_len;
    clips.reserve(static_cast<std::size_t>(n_clips));
    for (int c = 0; c < n_clips; ++c) {
        std::vector<int> w(static_cast<std::size_t>(clip_len));
        std::iota(w.begin(), w.end(), c * clip_len);
        clips.push_back(std::move(w));
    }
    return clips;
}

std::vector<Image> preprocess_frames(const FrameSequence& seq, const PreprocessOptions& opt) {
    if (seq.frames.empty()) throw std::invalid_argument("preprocess_frames: empty sequence");
    std::vector<Image> out;
    out.reserve(seq.frames.size());
    for (const Image& f : seq.frames) out.push_back(gamma_correct(resize_grayscale(f), opt.gamma));
    return out;
}

namespace {

// gray plane of one clip frame: crop 32x32 -> 24x32
void fill_gray(Tensor& gray, int t, const Image& proc) {
    const Image cropped = center_crop_rows(proc, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) gray.data[gray.at4(t, y, x, 0)] = cropped.at(y, x);
}

void fill_flow(Tensor& flow, int t, const Image& u01, const Image& v01) {
    const Image uc = center_crop_rows(u01, 24);
    const Image vc = center_crop_rows(v01, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) {
            flow.data[flow.at4(t, y, x, 0)] = uc.at(y, x);
            flow.data[flow.at4(t, y, x, 1)] = vc.at(y, x);
        }
}

}  // namespace

std::vector<Clip> build_clips(const std::vector<Image>& processed,
                              const std::vector<std::vector<int>>& windows,
                              const PreprocessOptions& opt) {
    std::vector<Clip> out;
    out.reserve(windows.size());
    for (const auto& window : windows) {
        const int len = static_cast<int>(window.size());
        Clip clip;
        clip.start_frame = window.front();
        clip.frame_ids = window;
        clip.gray = Tensor({len, 24, 32, 1});
        clip.flow = Tensor({len, 24, 32, 2});
        for (int t = 0; t < len; ++t) {
            const int src = window[static_cast<std::size_t>(t)];
            fill_gray(clip.gray, t, processed.at(static_cast<std::size_t>(src)));
            if (src == 0) {
                // no predecessor: neutral (zero-motion) value
                for (int y = 0; y < 24; ++y)
                    for (int x = 0; x < 32; ++x) {
                        clip.flow.data[clip.flow.at4(t, y, x, 0)] = 0.5f;
                        clip.flow.data[clip.flow.at4(t, y, x, 1)] = 0.5f;
                    }
            } else {
                const FlowField f = farneback_flow(processed.at(static_cast<std::size_t>(src - 1)),
                                                   processed.at(static_cast<std::size_t>(src)),
                                                   opt.flow);
                const auto [u01, v01] = flow_to_stream(f, opt.flow_max_disp);
                fill_flow(clip.flow, t, u01, v01);
            }
        }
        out.push_back(std::move(clip));
    }
    return out;
}

std::vector<Clip> build_training_clips(const FrameSequence& seq, const PreprocessOptions& opt) {
    const auto windows =
        training_clip_indices(static_cast<int>(seq.frames.size()), opt.subsample, opt.clip_len);
    return build_clips(preprocess_frames(seq, opt), windows, opt);
}

std::vector<Clip> build_test_clips(const FrameSequence& seq, const PreprocessOptions& opt) {
    const auto windows = test_clip_indices(static_cast<int>(seq.frames.size()), opt.clip_len);
    return build_clips(preprocess_frames(seq, opt), windows, opt);
}

namespace {
bool clip_touches(const Clip& clip, const AnnotationTrack& track, Behaviour target) {
    for (int id : clip.frame_ids) {
        if (id < 0 || id >= static_cast<int>(track.size()))
            throw std::invalid_argument("clip frame index " + std::to_string(id) +
                                        " outside annotation track of length " +
                                        std::to_string(track.size()));
        if (track[static_cast<std::size_t>(id)] == target) return true;
    }
    return false;
}
}  // namespace

std::vector<Clip> filter_pseudo_anomaly(std::vector<Clip> clips, const AnnotationTrack& track,
                                        Behaviour target) {
    std::vector<Clip> kept;
    kept.reserve(clips.size());
    for (auto& c : clips)
        if (!clip_touches(c, track, target)) kept.push_back(std::move(c));
    return kept;
}

void label_clips(std::vector<Clip>& clips, const AnnotationTrack& track, Behaviour target) {
    for (auto& c : clips) c.anomalous = clip_touches(c, track, target);
}

Clip hflip_augment(const Clip& clip) {
    Clip out;
    out.start_frame = clip.start_frame;
    out.frame_ids = clip.frame_ids;
    out.anomalous = clip.anomalous;
    out.gray = Tensor(clip.gray.shape);
    out.flow = Tensor(clip.flow.shape);
    const int T = clip.gray.shape[0];
    for (int t = 0; t < T; ++t)
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 32; ++x) {
                const int mx = 31 - x;
                out.gray.data[out.gray.at4(t, y, x, 0)] = clip.gray.data[clip.gray.at4(t, y, mx, 0)];
                // u mirrors and flips sign: in [0,1] units that is 1 - u
                out.flow.data[out.flow.at4(t, y, x, 0)] =
                    1.0f - clip.flow.data[clip.flow.at4(t, y, mx, 0)];
                out.flow.data[out.flow.at4(t, y, x, 1)] = clip.flow.data[clip.flow.at4(t, y, mx, 1)];
            }
    return out;
}

ClipSplit split_clips(std::vector<Clip> clips, float val_fraction, std::uint64_t seed) {
    if (!(val_fraction >= 0.0f && val_fraction < 1.0f))
        throw std::invalid_argument("split_clips: val_fraction must be in [0,1)");
    std::vector<std::size_t> idx(clips.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor((1.0 - static_cast<double>(val_fraction)) * static_cast<double>(clips.size())));
    ClipSplit split;
    split.train.reserve(n_train);
    split.val.reserve(clips.size() - n_train);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i < n_train)
            split.train.push_back(std::move(clips[idx[i]]));
        else
            split.val.push_back(std::move(clips[idx[i]]));
    }
    return split;
}

ClipBatch make_batch(const std::vector<Clip>& clips, const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
    const Clip& first = clips.at(static_cast<std::size_t>(indices[0]));
    const int T = first.gray.shape[0];
    const int B = static_cast<int>(indices.size());
    ClipBatch batch;
    batch.gray = Tensor({B, T, 24, 32, 1});
    batch.flow = Tensor({B, T, 24, 32, 2});
    batch.labels.reserve(indices.size());
    batch.start_frames.reserve(indices.size());
    const std::size_t gray_n = first.gray.data.size();
    const std::size_t flow_n = first.flow.data.size();
    for (int b = 0; b < B; ++b) {
        const Clip& c = clips.at(static_cast<std::size_t>(indices[static_cast<std::size_t>(b)]));
        if (c.gray.shape != first.gray.shape)
            throw std::invalid_argument("make_batch: clip shapes differ");
        std::copy(c.gray.data.begin(), c.gray.data.end(),
                  batch.gray.data.begin() + static_cast<std::ptrdiff_t>(b * gray_n));
        std::copy(c.flow.data.begin(), c.flow.data.end(),
                  batch.flow.data.begin() + static_cast<std::ptrdiff_t>(b * flow_n));
        batch.labels.push_back(c.anomalous ? 1.0f : 0.0f);
        batch.start_frames.push_back(c.start_frame);
    }
    return batch;
}

}  // namespace vad
