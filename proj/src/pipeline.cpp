#include "graphtcn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "graphtcn/adam.hpp"
#include "graphtcn/errors.hpp"
#include "graphtcn/kernels.hpp"
#include "graphtcn/losses.hpp"

#ifdef GTCN_HAVE_OPENMP
#include <omp.h>
#endif

namespace gtcn {

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string window_id(const SequenceWindow& w, std::size_t index) {
    return (w.scene_name.empty() ? std::string("window") : w.scene_name) + "#" + std::to_string(index) + "@frame" +
           std::to_string(w.start_frame);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

WindowingOptions windowing_of(const ModelConfig& config) {
    return {config.t_obs, config.t_pred, config.frame_step, config.stride};
}

std::vector<SequenceWindow> load_windows(const std::filesystem::path& data_dir, const std::vector<std::string>& scenes,
                                         const WindowingOptions& options) {
    const auto available = discover_scenes(data_dir);
    std::vector<SequenceWindow> out;
    for (const auto& name : scenes) {
        auto it = std::find_if(available.begin(), available.end(), [&](const auto& s) { return s.name == name; });
        if (it == available.end()) throw DataError("scene '" + name + "' not found in " + data_dir.string());
        auto windows = load_scene_windows(*it, options);
        std::move(windows.begin(), windows.end(), std::back_inserter(out));
    }
    return out;
}

TrainResult train(GraphTcn& model, const std::vector<SequenceWindow>& windows, const TrainOptions& options) {
    const ModelConfig& config = model.config();
    const std::size_t epochs = options.epochs.value_or(config.epochs);
    if (windows.empty()) throw ConfigError("training set is empty");

    Adam adam(model.params(), AdamOptions{config.lr});
    std::mt19937_64 order_rng(config.seed ^ 0x5eed0f0bde5ULL);
    std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(windows.size());

    TrainResult result;
    for (std::size_t e = 1; e <= epochs; ++e) {
        const int epoch = static_cast<int>(e);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), order_rng);

        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t idx : order) {
            const SequenceWindow& w = windows[idx];
            model.params().zero_grad();
            Tape tape;
            GraphTcn::TrainingLoss loss;
            {
                TapeScope scope(tape);
                loss = model.training_loss(w, config.samples, noise_rng, epoch);
            }
            const double total = loss.total.item();
            if (!std::isfinite(total))
                throw NumericError("non-finite loss " + fmt("%g", total) + " at epoch " + std::to_string(epoch) +
                                   ", window " + window_id(w, idx));
            tape.backward(loss.total);
            adam.step(model.params());
            ++result.steps;
            rec.total += total;
            rec.variety += loss.variety.item();
            rec.kl += loss.kl.item();
            ++rec.windows;
        }
        const double n = static_cast<double>(rec.windows);
        rec.total /= n;
        rec.variety /= n;
        rec.kl /= n;
        result.log.push_back(rec);
        if (options.on_epoch) options.on_epoch(rec);
    }
    return result;
}

TrainedModel train(const ModelConfig& config, const Split& split, const std::filesystem::path& data_dir,
                   const TrainOptions& options) {
    const auto windows = load_windows(data_dir, split.train_scenes, windowing_of(config));
    GraphTcn model(config);
    auto result = train(model, windows, options);
    return {std::move(model), std::move(result)};
}

std::string format_loss_line(const EpochRecord& r) {
    return std::to_string(r.epoch) + "\t" + std::to_string(r.windows) + "\t" + fmt("%.17g", r.total) + "\t" +
           fmt("%.17g", r.variety) + "\t" + fmt("%.17g", r.kl);
}

std::string format_loss_log(const std::vector<EpochRecord>& log) {
    std::string out = "epoch\twindows\ttotal\tvariety\tkl\n";
    for (const auto& r : log) out += format_loss_line(r) + "\n";
    return out;
}

SceneMetrics evaluate_windows(const GraphTcn& model, const std::vector<SequenceWindow>& windows, std::size_t samples,
                              std::uint64_t seed, const std::string& scene) {
    if (samples == 0) throw ContractError("evaluation needs at least one sample");
    SceneMetrics out;
    out.scene = scene;
    out.windows = windows.size();
    if (windows.empty()) return out;

    std::vector<MinOfM> per_window(windows.size());
    const auto count = static_cast<std::ptrdiff_t>(windows.size());
#ifdef GTCN_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t w = 0; w < count; ++w) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(w)};
        std::mt19937_64 rng(seq);
        const auto& win = windows[static_cast<std::size_t>(w)];
        per_window[static_cast<std::size_t>(w)] = evaluate_min_of_m(model.predict(win, samples, rng), win.future());
    }
    for (const auto& m : per_window) {
        out.ade += m.ade;
        out.fde += m.fde;
    }
    out.ade /= static_cast<double>(windows.size());
    out.fde /= static_cast<double>(windows.size());
    return out;
}

MetricsReport evaluate_dataset(const GraphTcn& model, const Split& split, const std::filesystem::path& data_dir,
                               std::size_t samples, std::uint64_t seed) {
    const auto windows = load_windows(data_dir, {split.test_scene}, windowing_of(model.config()));
    MetricsReport report;
    report.samples = samples;
    report.scenes.push_back(evaluate_windows(model, windows, samples, seed, split.test_scene));
    for (const auto& s : report.scenes) {
        report.mean_ade += s.ade;
        report.mean_fde += s.fde;
    }
    report.mean_ade /= static_cast<double>(report.scenes.size());
    report.mean_fde /= static_cast<double>(report.scenes.size());
    return report;
}

std::string format_report(const MetricsReport& report) {
    std::ostringstream out;
    out << "# ADE / FDE in meters, min over M = " << report.samples << " samples\n";
    out << "scene\twindows\tADE / FDE\n";
    for (const auto& s : report.scenes)
        out << s.scene << "\t" << s.windows << "\t" << fmt("%.2f", s.ade) << " / " << fmt("%.2f", s.fde) << "\n";
    out << "AVG\t-\t" << fmt("%.2f", report.mean_ade) << " / " << fmt("%.2f", report.mean_fde) << "\n";
    return out.str();
}

BenchReport benchmark_inference(const GraphTcn& model, const std::vector<SequenceWindow>& windows,
                                const BenchOptions& options) {
    if (windows.empty()) throw ConfigError("benchmark needs at least one window");
    if (options.repeats == 0 || options.samples == 0) throw ConfigError("benchmark needs repeats and samples >= 1");

    const int saved_threads = kernels::max_threads();
    kernels::set_num_threads(1);

    std::mt19937_64 rng(options.seed);
    auto run_once = [&](const SequenceWindow& w) {
        const Tensor feats = build_features(w);
        const auto enc = model.encode(feats, w.observed());
        const Tensor origin = w.origin();
        double sink = 0.0;
        for (std::size_t m = 0; m < options.samples; ++m) {
            const Tensor pred = relative_to_absolute(model.decode_prior(enc.hvec, rng), origin);
            sink += pred.data()[0];
        }
        return sink;
    };

    volatile double sink = 0.0;
    for (std::size_t i = 0; i < options.warmup; ++i) sink = sink + run_once(windows[i % windows.size()]);

    BenchReport report;
    report.samples = options.samples;
    report.repeats = options.repeats;
    std::vector<double> per_ped;
    for (std::size_t i = 0; i < options.repeats; ++i) {
        const auto& w = windows[i % windows.size()];
        const auto t0 = std::chrono::steady_clock::now();
        sink = sink + run_once(w);
        const auto t1 = std::chrono::steady_clock::now();
        const std::int64_t ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        report.run_ns.push_back(ns);
        report.run_peds.push_back(w.num_peds());
        report.total_ns += ns;
        report.total_peds += w.num_peds();
        per_ped.push_back(static_cast<double>(ns) * 1e-9 / static_cast<double>(w.num_peds()));
    }
    kernels::set_num_threads(saved_threads);

    std::vector<double> runs;
    for (auto ns : report.run_ns) runs.push_back(static_cast<double>(ns) * 1e-9);
    report.per_ped_mean_s = static_cast<double>(report.total_ns) * 1e-9 / static_cast<double>(report.total_peds);
    report.per_ped_median_s = median(per_ped);
    report.run_mean_s = static_cast<double>(report.total_ns) * 1e-9 / static_cast<double>(report.repeats);
    report.run_median_s = median(runs);

    std::ostringstream platform;
    platform << "threads=1 openmp=" << (kernels::openmp_enabled() ? "on" : "off");
#if defined(__clang__)
    platform << " compiler=clang-" << __clang_major__;
#elif defined(__GNUC__)
    platform << " compiler=gcc-" << __GNUC__;
#endif
    report.platform = platform.str();
    return report;
}

std::string format_bench(const BenchReport& r) {
    std::ostringstream out;
    out << "runs\t" << r.repeats << "\n";
    out << "samples\t" << r.samples << "\n";
    out << "pedestrians\t" << r.total_peds << "\n";
    out << "total_s\t" << fmt("%.9f", static_cast<double>(r.total_ns) * 1e-9) << "\n";
    out << "run_mean_s\t" << fmt("%.9f", r.run_mean_s) << "\n";
    out << "run_median_s\t" << fmt("%.9f", r.run_median_s) << "\n";
    out << "per_ped_mean_s\t" << fmt("%.9f", r.per_ped_mean_s) << "\n";
    out << "per_ped_median_s\t" << fmt("%.9f", r.per_ped_median_s) << "\n";
    out << "platform\t" << r.platform << "\n";
    return out.str();
}

}  // namespace gtcn
