// Command-line front end for the detection and tracking pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "veldt/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string dataset;
    std::vector<std::string> sequences;
    std::string detector = "oracle";
    std::string checkpoint;
    std::optional<uint64_t> seed;
    std::optional<int> jobs;
};

veldt::PipelineConfig make_config(const CommonOpts& o) {
    veldt::PipelineConfig cfg;
    if (!o.config_path.empty()) cfg = veldt::load_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* app, CommonOpts& o, bool with_detector = true) {
    app->add_option("--config", o.config_path, "pipeline config file");
    app->add_option("--dataset", o.dataset, "dataset root directory")->required();
    app->add_option("--sequence", o.sequences, "sequence name(s)")->required();
    app->add_option("--seed", o.seed, "random seed override");
    app->add_option("--jobs", o.jobs, "worker cap for frame-parallel stages");
    if (with_detector)
        app->add_option("--detector", o.detector, "geometric|net|oracle")
            ->check(CLI::IsMember({"geometric", "net", "oracle"}));
    app->add_option("--checkpoint", o.checkpoint, "model checkpoint (net detector / train)");
}

veldt::DetectorContext make_detector(const CommonOpts& o, veldt::NetParams<float>& net_storage,
                                     bool& net_loaded) {
    veldt::DetectorContext det;
    det.kind = veldt::parse_detector(o.detector);
    if (det.kind == veldt::DetectorKind::Net) {
        if (o.checkpoint.empty())
            throw std::runtime_error("--checkpoint is required for the net detector");
        net_storage = veldt::load_checkpoint<float>(o.checkpoint);
        net_loaded = true;
        det.net = &net_storage;
    }
    return det;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lidar-only vehicle detection and tracking"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string out_path = "out";
    int synth_frames = 40;
    int synth_count = 2;
    std::string synth_root = "synth_data";
    bool resume = false;
    long long train_budget = 0;

    auto* project = app.add_subcommand("project", "dump range images and occupancy stats");
    add_common(project, opts, false);
    project->add_option("--out", out_path, "output directory");

    auto* detect = app.add_subcommand("detect", "dump per-frame box observations");
    add_common(detect, opts);
    detect->add_option("--out", out_path, "observations CSV path");

    auto* track = app.add_subcommand("track", "run the full pipeline, dump tracks CSV");
    add_common(track, opts);
    track->add_option("--out", out_path, "tracks CSV path");

    auto* evaluate = app.add_subcommand("evaluate", "score a tracks CSV against the labels");
    add_common(evaluate, opts, false);
    std::string tracks_csv;
    evaluate->add_option("--tracks", tracks_csv, "tracks CSV produced by `track`")->required();
    evaluate->add_option("--out", out_path, "metrics CSV path (optional)");

    auto* train = app.add_subcommand("train", "train the detector on labeled scans");
    add_common(train, opts, false);
    train->add_option("--out", out_path, "checkpoint output path");
    train->add_flag("--resume", resume, "continue from the checkpoint at --out");
    train->add_option("--iterations", train_budget, "override train.iterations for this run");

    auto* synth = app.add_subcommand("synth", "generate synthetic sequences in KITTI layout");
    synth->add_option("--out", synth_root, "dataset root to create");
    synth->add_option("--frames", synth_frames, "frames per sequence");
    synth->add_option("--count", synth_count, "number of sequences");
    std::optional<uint64_t> synth_seed;
    synth->add_option("--seed", synth_seed, "base seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const uint64_t base = synth_seed.value_or(1);
            for (int i = 0; i < synth_count; ++i) {
                char name[16];
                std::snprintf(name, sizeof(name), "%04d", i);
                veldt::write_synth_sequence(
                    synth_root, name,
                    veldt::make_benchmark_scene(base + static_cast<uint64_t>(i), synth_frames));
                std::cout << "wrote sequence " << name << " (" << synth_frames << " frames)\n";
            }
            return 0;
        }

        veldt::PipelineConfig cfg = make_config(opts);

        if (train->parsed()) {
            if (train_budget > 0) cfg.train.iterations = static_cast<int>(train_budget);
            std::vector<veldt::Sequence> seqs;
            for (const auto& s : opts.sequences) seqs.push_back(veldt::load_sequence(opts.dataset, s));
            const std::string ckpt = opts.checkpoint.empty() ? out_path : opts.checkpoint;
            const auto log = veldt::cmd_train(seqs, cfg, ckpt, ckpt + ".loss.csv", resume);
            if (!log.empty())
                std::cout << "trained " << log.size() << " iterations, final total loss "
                          << log.back().total << "\n";
            return 0;
        }

        veldt::NetParams<float> net_storage;
        bool net_loaded = false;

        std::vector<veldt::TrackingMetrics> per_seq;
        for (const auto& seq_name : opts.sequences) {
            const veldt::Sequence seq =
                veldt::load_sequence(opts.dataset, seq_name, /*need_labels=*/!project->parsed());

            if (project->parsed()) {
                const auto stats = veldt::cmd_project(seq, cfg, out_path + "/" + seq_name);
                std::cout << seq_name << ": " << stats.frames << " frames, " << stats.points
                          << " points, " << stats.occupied << " occupied pixels, " << stats.dropped
                          << " out of view\n";
            } else if (detect->parsed()) {
                const veldt::DetectorContext det = make_detector(opts, net_storage, net_loaded);
                const std::string out = opts.sequences.size() == 1
                                            ? out_path
                                            : out_path + "." + seq_name + ".csv";
                veldt::cmd_detect(seq, cfg, det, out);
                std::cout << seq_name << ": observations written to " << out << "\n";
            } else if (track->parsed()) {
                const veldt::DetectorContext det = make_detector(opts, net_storage, net_loaded);
                const std::string out = opts.sequences.size() == 1
                                            ? out_path
                                            : out_path + "." + seq_name + ".csv";
                const auto stats = veldt::cmd_track(seq, cfg, det, out);
                std::fprintf(stdout, "%s: tracks written to %s (%.2f ms/frame mean, %.2f max)\n",
                             seq_name.c_str(), out.c_str(), stats.mean_frame_ms,
                             stats.max_frame_ms);
            } else if (evaluate->parsed()) {
                // multi-sequence runs follow the track command's naming convention
                const std::string path = opts.sequences.size() == 1
                                             ? tracks_csv
                                             : tracks_csv + "." + seq_name + ".csv";
                per_seq.push_back(veldt::cmd_evaluate(seq, cfg, path));
            }
        }

        if (evaluate->parsed()) {
            const veldt::TrackingMetrics m = veldt::merge_metrics(per_seq);
            std::cout << veldt::metrics_table(m);
            if (!out_path.empty() && out_path != "out") veldt::write_metrics_csv(out_path, m);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
