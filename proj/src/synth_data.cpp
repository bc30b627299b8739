#include "vad/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vad/util.hpp"

namespace vad {

namespace {

struct WalkState {
    float x, y, vx, vy;
};

void step_walk(WalkState& s, const SynthSpec& spec, std::mt19937_64& rng, float min_y, float max_y,
               float min_x, float max_x) {
    std::normal_distribution<float> n01(0.0f, 1.0f);
    const float drive = 0.45f * spec.walk_speed;
    s.vx = 0.82f * s.vx + drive * n01(rng);
    s.vy = 0.82f * s.vy + drive * n01(rng);
    const float vmax = 2.0f * spec.walk_speed;
    s.vx = std::clamp(s.vx, -vmax, vmax);
    s.vy = std::clamp(s.vy, -vmax, vmax);
    s.x += s.vx;
    s.y += s.vy;
    if (s.x < min_x) { s.x = 2.0f * min_x - s.x; s.vx = -s.vx; }
    if (s.x > max_x) { s.x = 2.0f * max_x - s.x; s.vx = -s.vx; }
    if (s.y < min_y) { s.y = 2.0f * min_y - s.y; s.vy = -s.vy; }
    if (s.y > max_y) { s.y = 2.0f * max_y - s.y; s.vy = -s.vy; }
    s.x = std::clamp(s.x, min_x, max_x);
    s.y = std::clamp(s.y, min_y, max_y);
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
    if (spec.frames <= 0 || spec.width < 16 || spec.height < 16)
        throw std::invalid_argument("synth: need frames > 0 and at least 16x16 frames");
    if (!(spec.walk_speed >= 0.0f) || !(spec.noise >= 0.0f))
        throw std::invalid_argument("synth: walk_speed and noise must be >= 0");

    std::vector<AnomalyInterval> sorted = spec.anomalies;
    std::sort(sorted.begin(), sorted.end(),
              [](const AnomalyInterval& a, const AnomalyInterval& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& iv = sorted[i];
        if (iv.start < 0 || iv.end > spec.frames || iv.start >= iv.end)
            throw std::invalid_argument("synth: interval [" + std::to_string(iv.start) + "," +
                                        std::to_string(iv.end) + ") outside 0.." +
                                        std::to_string(spec.frames));
        if (i > 0 && iv.start < sorted[i - 1].end)
            throw std::invalid_argument("synth: overlapping anomaly intervals at frame " +
                                        std::to_string(iv.start));
    }

    // per-frame anomaly lookup: -1 none, otherwise index into sorted
    std::vector<int> frame_anom(static_cast<std::size_t>(spec.frames), -1);
    for (std::size_t i = 0; i < sorted.size(); ++i)
        for (int f = sorted[i].start; f < sorted[i].end; ++f)
            frame_anom[static_cast<std::size_t>(f)] = static_cast<int>(i);

    const float H = static_cast<float>(spec.height);
    const float W = static_cast<float>(spec.width);
    // Floor region: bottom two-thirds, with margin so the centroid stays
    // clearly below H/3 during normal frames.
    const float min_y = H / 3.0f + 3.0f, max_y = H - 5.0f;
    const float min_x = 5.0f, max_x = W - 6.0f;

    std::mt19937_64 walk_rng(splitmix64(spec.seed));
    WalkState walk{(min_x + max_x) / 2.0f, (min_y + max_y) / 2.0f, 0.0f, 0.0f};

    SynthResult out;
    out.frames.fps = spec.fps;
    out.frames.source_id = "synth";
    out.frames.frames.reserve(static_cast<std::size_t>(spec.frames));
    out.track.assign(static_cast<std::size_t>(spec.frames), Behaviour::Walk);

    // frozen walk positions per interval, captured at interval start
    std::vector<std::pair<float, float>> hold_pos(sorted.size(), {0.0f, 0.0f});
    const float twosig2 = 2.0f * spec.blob_sigma * spec.blob_sigma;

    for (int fidx = 0; fidx < spec.frames; ++fidx) {
        const int ai = frame_anom[static_cast<std::size_t>(fidx)];
        const bool at_start = ai >= 0 && fidx == sorted[static_cast<std::size_t>(ai)].start;
        if (at_start) hold_pos[static_cast<std::size_t>(ai)] = {walk.x, walk.y};
        // the underlying walk advances every frame so the trajectory resumes
        // seamlessly after an episode
        step_walk(walk, spec, walk_rng, min_y, max_y, min_x, max_x);

        std::mt19937_64 frame_rng(splitmix64(spec.seed ^ (0x51ed2701ULL + static_cast<std::uint64_t>(fidx))));
        std::uniform_real_distribution<float> uni(-1.0f, 1.0f);

        float cx = walk.x, cy = walk.y;
        bool subtle = false;
        float phase = 0.0f;
        if (ai >= 0) {
            const auto& iv = sorted[static_cast<std::size_t>(ai)];
            if (iv.kind == AnomalyKind::Conspicuous) {
                // pinned to the top edge, essentially motionless
                cx = hold_pos[static_cast<std::size_t>(ai)].first + 0.05f * uni(frame_rng);
                cy = 3.0f + 0.05f * uni(frame_rng);
                out.track[static_cast<std::size_t>(fidx)] = Behaviour::Hang;
            } else {
                cx = hold_pos[static_cast<std::size_t>(ai)].first;
                cy = hold_pos[static_cast<std::size_t>(ai)].second;
                phase = 2.4f * static_cast<float>(fidx - iv.start);
                subtle = true;
                out.track[static_cast<std::size_t>(fidx)] = Behaviour::Groom;
            }
        }

        Image frame(spec.height, spec.width, 0.05f);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                const float dx = static_cast<float>(x) - cx;
                const float dy = static_cast<float>(y) - cy;
                float blob = spec.blob_intensity * std::exp(-(dx * dx + dy * dy) / twosig2);
                if (subtle)
                    // localized high-frequency shimmer, zero-mean over time
                    blob *= 1.0f + spec.jitter_amp * std::sin(2.0f * dx + phase) *
                                       std::cos(2.0f * dy);
                const float v = frame.at(y, x) + blob + spec.noise * uni(frame_rng);
                frame.at(y, x) = std::clamp(v, 0.0f, 1.0f);
            }
        out.frames.frames.push_back(std::move(frame));
    }
    return out;
}

void write_dataset(const std::string& dir, const SynthResult& result) {
    save_frame_dir(dir, result.frames);
    write_annotations(dir + "/annotations.txt", track_to_intervals(result.track));
}

SynthSpec synth_spec_from_toml(const TomlTable& toml) {
    SynthSpec s;
    s.frames = static_cast<int>(toml.get_int_or("synth.frames", s.frames));
    s.fps = static_cast<float>(toml.get_double_or("synth.fps", s.fps));
    s.width = static_cast<int>(toml.get_int_or("synth.width", s.width));
    s.height = static_cast<int>(toml.get_int_or("synth.height", s.height));
    s.seed = static_cast<std::uint64_t>(toml.get_int_or("synth.seed", static_cast<std::int64_t>(s.seed)));
    s.blob_sigma = static_cast<float>(toml.get_double_or("synth.blob_sigma", s.blob_sigma));
    s.blob_intensity =
        static_cast<float>(toml.get_double_or("synth.blob_intensity", s.blob_intensity));
    s.noise = static_cast<float>(toml.get_double_or("synth.noise", s.noise));
    s.walk_speed = static_cast<float>(toml.get_double_or("synth.walk_speed", s.walk_speed));
    s.jitter_amp = static_cast<float>(toml.get_double_or("synth.jitter_amp", s.jitter_amp));
    for (const std::string& entry : toml.get_array("synth.anomalies")) {
        std::istringstream ss(entry);
        std::string kind;
        AnomalyInterval iv;
        if (!(ss >> kind >> iv.start >> iv.end))
            throw std::runtime_error("synth config: bad anomaly entry '" + entry +
                                     "', expected '<hang|groom> <start> <end>'");
        if (kind == "hang" || kind == "conspicuous")
            iv.kind = AnomalyKind::Conspicuous;
        else if (kind == "groom" || kind == "subtle")
            iv.kind = AnomalyKind::Subtle;
        else
            throw std::runtime_error("synth config: unknown anomaly kind '" + kind + "'");
        s.anomalies.push_back(iv);
    }
    return s;
}

}  // namespace vad
