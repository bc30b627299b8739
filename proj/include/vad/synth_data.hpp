#pragma once

#include <string>
#include <vector>

#include "vad/preprocessing.hpp"
#include "vad/toml_lite.hpp"

namespace vad {

enum class AnomalyKind { Conspicuous, Subtle };

struct AnomalyInterval {
    int start = 0;  // inclusive
    int end = 0;    // exclusive
    AnomalyKind kind = AnomalyKind::Conspicuous;
};

/// Synthetic home-cage stand-in: a bright blob random-walking over the floor
/// region, with injectable hang-like (pinned to the top edge, still) and
/// groom-like (in place, high-frequency shimmer) episodes.
struct SynthSpec {
    int frames = 2000;
    float fps = 25.0f;
    int width = 64;
    int height = 64;
    std::uint64_t seed = 17;
    float blob_sigma = 5.0f;
    float blob_intensity = 0.9f;
    float noise = 0.02f;
    float walk_speed = 1.2f;   // px/frame scale of the random walk
    float jitter_amp = 0.35f;  // relative amplitude of the subtle shimmer
    std::vector<AnomalyInterval> anomalies;
};

struct SynthResult {
    FrameSequence frames;
    AnnotationTrack track;
};

/// Deterministic in the seed; rejects overlapping or out-of-range intervals.
SynthResult generate(const SynthSpec& spec);

/// Frames + annotations.txt in the formats the preprocessing stage consumes.
void write_dataset(const std::string& dir, const SynthResult& result);

/// Reads the [synth] section; anomaly intervals are entries of the form
/// "hang <start> <end>" / "groom <start> <end>" in the `anomalies` array.
SynthSpec synth_spec_from_toml(const TomlTable& toml);

}  // namespace vad
