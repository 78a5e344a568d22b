#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "graphtcn/config.hpp"
#include "graphtcn/data.hpp"
#include "graphtcn/model.hpp"

namespace gtcn {

WindowingOptions windowing_of(const ModelConfig& config);

/// Windows of the named scenes under data_dir, in scene order. Missing scenes raise DataError.
std::vector<SequenceWindow> load_windows(const std::filesystem::path& data_dir, const std::vector<std::string>& scenes,
                                         const WindowingOptions& options);

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
    int epoch = 0;
    std::size_t windows = 0;
    double total = 0.0;    // epoch means
    double variety = 0.0;
    double kl = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> log;
    std::size_t steps = 0;
};

struct TrainOptions {
    /// Overrides config.epochs when set.
    std::optional<std::size_t> epochs;
    /// Called after every epoch, e.g. to stream the loss log.
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Trains in place: per epoch a seeded shuffle of the windows, one window per Adam step.
/// Throws ConfigError on an empty training set and NumericError on a non-finite loss.
TrainResult train(GraphTcn& model, const std::vector<SequenceWindow>& windows, const TrainOptions& options = {});

/// Loads the split's training scenes, trains a fresh model and returns it with its log.
struct TrainedModel {
    GraphTcn model;
    TrainResult result;
};
TrainedModel train(const ModelConfig& config, const Split& split, const std::filesystem::path& data_dir,
                   const TrainOptions& options = {});

/// Tab-separated: "epoch  windows  total  variety  kl", reals in %.17g.
std::string format_loss_line(const EpochRecord& record);
std::string format_loss_log(const std::vector<EpochRecord>& log);

// ---------------------------------------------------------------------------
// Evaluation

struct SceneMetrics {
    std::string scene;
    std::size_t windows = 0;
    double ade = 0.0;
    double fde = 0.0;
};

struct MetricsReport {
    std::size_t samples = 0;
    std::vector<SceneMetrics> scenes;
    double mean_ade = 0.0;  // mean over scenes
    double mean_fde = 0.0;
};

/// Min-of-M ADE/FDE averaged over the windows of one scene. Window w draws its
/// noise from a generator seeded by (seed, w), so results do not depend on the
/// thread count.
SceneMetrics evaluate_windows(const GraphTcn& model, const std::vector<SequenceWindow>& windows, std::size_t samples,
                              std::uint64_t seed, const std::string& scene);

/// Evaluates the split's test scene.
MetricsReport evaluate_dataset(const GraphTcn& model, const Split& split, const std::filesystem::path& data_dir,
                               std::size_t samples, std::uint64_t seed = 0);

/// Tab-separated table: one "scene  windows  ADE / FDE" row per scene plus an AVG row, two decimals.
std::string format_report(const MetricsReport& report);

// ---------------------------------------------------------------------------
// Inference benchmark

struct BenchOptions {
    std::size_t repeats = 100;
    std::size_t warmup = 10;
    std::size_t samples = 4;
    std::uint64_t seed = 0;
};

struct BenchReport {
    std::vector<std::int64_t> run_ns;  // wall time of each timed run
    std::vector<std::size_t> run_peds; // pedestrians in each timed run's window
    std::size_t samples = 0;
    std::size_t repeats = 0;
    std::int64_t total_ns = 0;
    std::size_t total_peds = 0;          // sum of run_peds
    double per_ped_mean_s = 0.0;         // total_ns / total_peds
    double per_ped_median_s = 0.0;       // median of run_ns[i] / run_peds[i]
    double run_mean_s = 0.0;
    double run_median_s = 0.0;
    std::string platform;
};

/// Times features -> encoder -> M decoded samples per window on one thread,
/// cycling through `windows` for `repeats` timed runs after `warmup` untimed ones.
BenchReport benchmark_inference(const GraphTcn& model, const std::vector<SequenceWindow>& windows,
                                const BenchOptions& options);

std::string format_bench(const BenchReport& report);

}  // namespace gtcn
