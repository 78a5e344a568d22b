// Command-line front end: train, eval, bench, predict, dump-attn, plot.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "graphtcn/checkpoint.hpp"
#include "graphtcn/errors.hpp"
#include "graphtcn/pipeline.hpp"
#include "graphtcn/viz.hpp"

namespace fs = std::filesystem;
using namespace gtcn;

namespace {

std::vector<std::string> scene_names(const fs::path& data) {
    std::vector<std::string> out;
    for (const auto& s : discover_scenes(data)) out.push_back(s.name);
    return out;
}

Split split_for(const fs::path& data, const std::string& leave_out) {
    for (auto& s : make_splits(scene_names(data)))
        if (s.test_scene == leave_out) return s;
    throw DataError("scene '" + leave_out + "' not found in " + data.string());
}

SequenceWindow pick_window(const GraphTcn& model, const fs::path& data, const std::string& scene, std::size_t id) {
    auto windows = load_windows(data, {scene}, windowing_of(model.config()));
    if (id >= windows.size())
        throw DataError("window " + std::to_string(id) + " out of range; scene '" + scene + "' has " +
                        std::to_string(windows.size()));
    return windows[id];
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text_file(out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pedestrian trajectory prediction with graph attention and temporal convolutions"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train on every scene but the held-out one");
    std::string data, leave_out, config_path, ckpt_out, log_out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    train_cmd->add_option("--data", data, "directory of scene files")->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--leave-out", leave_out, "held-out test scene")->required();
    train_cmd->add_option("--config", config_path, "model config (key = value)")->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", seed, "overrides the config seed");
    train_cmd->add_option("--epochs", epochs, "overrides the config epoch count");
    train_cmd->add_option("--out", ckpt_out, "checkpoint path")->required();
    train_cmd->add_option("--log", log_out, "loss log path (default: stdout)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "min-of-M ADE / FDE on the held-out scene");
    std::string ckpt;
    std::size_t samples = 4;
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--leave-out", leave_out)->required();
    eval_cmd->add_option("--samples", samples, "M")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", eval_seed, "noise seed");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "single-threaded inference timing");
    BenchOptions bench;
    std::string bench_scene;
    bench_cmd->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
    bench_cmd->add_option("--scene", bench_scene, "restrict to one scene");
    bench_cmd->add_option("--repeats", bench.repeats)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--warmup", bench.warmup);
    bench_cmd->add_option("--samples", bench.samples, "M")->check(CLI::PositiveNumber);

    // predict / dump-attn
    std::string scene, out;
    std::size_t window_id = 0;
    std::uint64_t pred_seed = 0;
    auto* predict_cmd = app.add_subcommand("predict", "write observed, ground-truth and sampled trajectories");
    auto* attn_cmd = app.add_subcommand("dump-attn", "write per-layer, per-head attention matrices");
    for (auto* cmd : {predict_cmd, attn_cmd}) {
        cmd->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
        cmd->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
        cmd->add_option("--scene", scene)->required();
        cmd->add_option("--window-id", window_id);
        cmd->add_option("--out", out, "output file (default: stdout)");
    }
    predict_cmd->add_option("--samples", samples, "M")->check(CLI::PositiveNumber);
    predict_cmd->add_option("--seed", pred_seed);

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "render a dump as SVG");
    std::string kind, in;
    AttentionView view;
    plot_cmd->add_option("--kind", kind, "trajectories, samples or attention")->required();
    plot_cmd->add_option("--in", in)->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--out", out)->required();
    plot_cmd->add_option("--layer", view.layer);
    plot_cmd->add_option("--head", view.head);
    plot_cmd->add_option("--step", view.step);
    plot_cmd->add_option("--focal", view.focal, "pedestrian index whose attention is drawn");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            ModelConfig config = config_path.empty() ? ModelConfig{} : load_config(config_path);
            if (seed) config.seed = *seed;
            std::ofstream log_file;
            if (!log_out.empty()) {
                log_file.open(log_out, std::ios::trunc);
                if (!log_file) throw IoError("cannot write " + log_out);
            }
            std::ostream& log = log_out.empty() ? std::cout : log_file;
            log << "epoch\twindows\ttotal\tvariety\tkl\n";
            TrainOptions opts;
            opts.epochs = epochs;
            opts.on_epoch = [&](const EpochRecord& r) { log << format_loss_line(r) << '\n' << std::flush; };
            auto trained = train(config, split_for(data, leave_out), data, opts);
            save_checkpoint(ckpt_out, trained.model.params(), trained.model.config());
        } else if (*eval_cmd) {
            const GraphTcn model = model_from_checkpoint(load_checkpoint(ckpt));
            std::cout << format_report(evaluate_dataset(model, split_for(data, leave_out), data, samples, eval_seed));
        } else if (*bench_cmd) {
            const GraphTcn model = model_from_checkpoint(load_checkpoint(ckpt));
            const auto scenes = bench_scene.empty() ? scene_names(data) : std::vector<std::string>{bench_scene};
            const auto windows = load_windows(data, scenes, windowing_of(model.config()));
            std::cout << format_bench(benchmark_inference(model, windows, bench));
        } else if (*predict_cmd) {
            const GraphTcn model = model_from_checkpoint(load_checkpoint(ckpt));
            const auto window = pick_window(model, data, scene, window_id);
            std::mt19937_64 rng(pred_seed);
            const auto pred = model.predict(window, samples, rng);
            emit(format_trajectory_dump(make_trajectory_dump(window, &pred)), out);
        } else if (*attn_cmd) {
            const GraphTcn model = model_from_checkpoint(load_checkpoint(ckpt));
            if (!model.config().uses_efgat()) throw ConfigError("variant no_efgat has no attention");
            const auto window = pick_window(model, data, scene, window_id);
            const auto enc = model.encode(window, true);
            emit(format_attention_dump(make_attention_dump(window, enc.attention)), out);
        } else if (*plot_cmd) {
            emit_plot(parse_plot_kind(kind), in, out, view);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "gtcn: %s\n", e.what());
        return 1;
    }
    return 0;
}
