#include "vad/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vad/evaluation.hpp"
#include "vad/synth_data.hpp"
#include "vad/training.hpp"
#include "vad/util.hpp"

namespace vad::cli {

namespace {

using nlohmann::json;

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    json j;
    f >> j;
    return j;
}

// Reproducibility record for one command: the run id is derived from the
// config and data hashes only, so a replay with the same inputs gets the
// same id and artifacts.
void write_manifest(const std::string& dir, const std::string& command,
                    std::uint64_t config_hash, std::uint64_t data_hash, std::uint64_t seed,
                    const std::vector<std::string>& artifacts) {
    json j;
    j["run_id"] = to_hex(config_hash ^ (data_hash * 0x9e3779b97f4a7c15ULL));
    j["command"] = command;
    j["config_hash"] = to_hex(config_hash);
    j["data_hash"] = to_hex(data_hash);
    j["seed"] = seed;
    j["artifacts"] = artifacts;
    j["created"] = iso8601_now();
    write_json(dir + "/manifest.json", j);
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed,
              bool seed_set) {
    if (!std::filesystem::exists(spec_path)) {
        std::cerr << "synth: spec file not found: " << spec_path << "\n";
        return 1;
    }
    SynthSpec spec = synth_spec_from_toml(TomlTable::parse_file(spec_path));
    if (seed_set) spec.seed = seed;
    const SynthResult result = generate(spec);
    write_dataset(out_dir, result);
    const std::uint64_t config_hash = fnv1a64_file(spec_path);
    const std::uint64_t data_hash = hash_files(out_dir, list_files(out_dir));
    write_manifest(out_dir, "synth", config_hash, data_hash, spec.seed,
                   {"manifest.txt", "annotations.txt"});
    std::cout << "synth: wrote " << result.frames.frames.size() << " frames to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, std::uint64_t seed,
              bool seed_set) {
    if (!std::filesystem::exists(config_path)) {
        std::cerr << "train: config file not found: " << config_path << "\n";
        return 1;
    }
    TrainConfig cfg = config_from_toml(TomlTable::parse_file(config_path));
    if (seed_set) cfg.seed = seed;
    const TrainResult result = train(cfg, out_dir);
    const std::uint64_t config_hash = fnv1a64_file(config_path);
    const std::uint64_t data_hash = hash_files(cfg.data_dir, list_files(cfg.data_dir));
    write_manifest(out_dir, "train", config_hash, data_hash, cfg.seed,
                   {"checkpoint.vae1", "train_log.csv"});
    if (result.status == TrainStatus::AbortedNonFinite) {
        std::cerr << "train: aborted on non-finite loss after "
                  << result.log.epochs.size() << " completed epoch(s); last good checkpoint "
                  << (result.checkpoint_path.empty() ? "none" : result.checkpoint_path) << "\n";
        return 1;
    }
    std::cout << "train: " << kind_name(cfg.kind) << " finished " << result.log.epochs.size()
              << " epochs, final train loss "
              << (result.log.epochs.empty() ? 0.0 : result.log.epochs.back().train_loss) << "\n";
    return 0;
}

int cmd_evaluate(const std::string& ck_path, const std::string& data_dir,
                 const std::string& target_name, const std::string& out_dir,
                 const std::string& kind_override) {
    if (!std::filesystem::exists(ck_path)) {
        std::cerr << "evaluate: checkpoint not found: " << ck_path << "\n";
        return 1;
    }
    const Checkpoint ck = load_checkpoint(ck_path);
    if (!kind_override.empty() && parse_kind(kind_override) != ck.kind) {
        std::cerr << "evaluate: checkpoint holds " << kind_name(ck.kind)
                  << " but --kind requested " << kind_override << "\n";
        return 3;
    }
    const Behaviour target = parse_behaviour(target_name);
    const FrameSequence seq = load_frame_dir(data_dir);
    const AnnotationTrack track =
        read_annotations(data_dir + "/annotations.txt", static_cast<int>(seq.frames.size()));
    PreprocessOptions opt;
    std::vector<Clip> clips = build_test_clips(seq, opt);
    label_clips(clips, track, target);

    EvalReport report;
    try {
        report = evaluate(ck, clips);
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        if (what.find("no positive") != std::string::npos ||
            what.find("no negative") != std::string::npos) {
            std::cerr << "evaluate: " << what << "\n";
            return 4;
        }
        throw;
    }

    std::filesystem::create_directories(out_dir);
    write_trace_csv(out_dir + "/trace.csv", report.trace);
    write_regularity_svg(out_dir + "/regularity.svg", report.trace);
    int n_anom = 0;
    for (int l : report.trace.labels) n_anom += l;
    json summary;
    summary["kind"] = kind_name(ck.kind);
    summary["target"] = behaviour_name(target);
    summary["auc"] = report.auc;
    summary["n_clips"] = report.trace.labels.size();
    summary["n_anomalous"] = n_anom;
    summary["checkpoint"] = ck_path;
    summary["data"] = data_dir;
    write_json(out_dir + "/summary.json", summary);
    const std::uint64_t config_hash = fnv1a64_file(ck_path);
    const std::uint64_t data_hash = hash_files(data_dir, list_files(data_dir));
    write_manifest(out_dir, "evaluate", config_hash, data_hash, ck.params.seed,
                   {"trace.csv", "regularity.svg", "summary.json"});
    std::printf("AUC %.6f\n", report.auc);
    return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
    std::ofstream f(out_path);
    if (!f) {
        std::cerr << "report: cannot write " << out_path << "\n";
        return 1;
    }
    f << "kind,target,auc,n_clips,n_anomalous\n";
    for (const std::string& dir : run_dirs) {
        const json s = read_json(dir + "/summary.json");
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%s,%.6f,%llu,%llu\n",
                      s.at("kind").get<std::string>().c_str(),
                      s.at("target").get<std::string>().c_str(), s.at("auc").get<double>(),
                      static_cast<unsigned long long>(s.at("n_clips").get<std::uint64_t>()),
                      static_cast<unsigned long long>(s.at("n_anomalous").get<std::uint64_t>()));
        f << line;
    }
    std::cout << "report: wrote " << out_path << " (" << run_dirs.size() << " runs)\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"two-stream autoencoder anomaly detection pipeline"};
    app.require_subcommand(1);

    std::uint64_t seed = 17;
    app.add_option("--seed", seed, "master seed for any randomness (default 17)");

    std::string synth_spec, synth_out = "synth_out";
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--spec", synth_spec, "synth spec TOML")->required();
    synth->add_option("--out", synth_out, "output directory");

    std::string train_config, train_out = "train_out";
    auto* tr = app.add_subcommand("train", "train a model from a TOML config");
    tr->add_option("--config", train_config, "train config TOML")->required();
    tr->add_option("--out", train_out, "output directory");

    std::string eval_ck, eval_data, eval_target = "hang", eval_out = "eval_out", eval_kind;
    auto* ev = app.add_subcommand("evaluate", "score a checkpoint against labelled data");
    ev->add_option("--checkpoint", eval_ck, "checkpoint file")->required();
    ev->add_option("--data", eval_data, "frame directory with annotations")->required();
    ev->add_option("--target", eval_target, "behaviour treated as anomalous");
    ev->add_option("--out", eval_out, "output directory");
    ev->add_option("--kind", eval_kind, "expected model kind (mismatch fails)");

    std::vector<std::string> report_runs;
    std::string report_out = "report.csv";
    auto* rp = app.add_subcommand("report", "aggregate evaluation runs into one CSV");
    rp->add_option("--run", report_runs, "evaluation output directory (repeatable)")->required();
    rp->add_option("--out", report_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const bool seed_set = app.count("--seed") > 0;
    try {
        if (synth->parsed()) return cmd_synth(synth_spec, synth_out, seed, seed_set);
        if (tr->parsed()) return cmd_train(train_config, train_out, seed, seed_set);
        if (ev->parsed()) return cmd_evaluate(eval_ck, eval_data, eval_target, eval_out, eval_kind);
        if (rp->parsed()) return cmd_report(report_runs, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: field '" << e.field << "': " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace vad::cli
