#pragma once

// Text dumps of predictions and attention, and a small SVG emitter for both.
//
// Prediction dump, one tab-separated record per line:
//   meta   N  T_obs  T_pred  M
//   obs    i  t  x  y          observed positions
//   gt     i  t  x  y          ground-truth future
//   pred   m  i  t  x  y       sampled futures
//
// Attention dump:
//   meta   N  T  layers
//   ped    i  id
//   pos    i  t  x  y
//   attn   layer  head  t  i  j  alpha     alpha is row i's weight on j
//
// Lines starting with '#' are comments. Reals are written with %.17g.

#include <filesystem>
#include <string>
#include <vector>

#include "graphtcn/data.hpp"
#include "graphtcn/decoders.hpp"
#include "graphtcn/efgat.hpp"

namespace gtcn {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct TrajectoryDump {
    std::vector<std::vector<Point>> observed;              // [N][T_obs]
    std::vector<std::vector<Point>> truth;                 // [N][T_pred], may be empty
    std::vector<std::vector<std::vector<Point>>> samples;  // [M][N][T_pred]
};

struct AttentionDump {
    std::size_t peds = 0;
    std::size_t steps = 0;
    std::vector<std::int64_t> ped_ids;
    std::vector<std::vector<Point>> positions;  // [N][T]
    // layers[l] is [heads][T][N][N], flattened row-major
    struct Layer {
        std::size_t heads = 0;
        std::vector<double> alpha;
        double at(std::size_t head, std::size_t t, std::size_t i, std::size_t j, std::size_t n, std::size_t steps) const {
            return alpha[((head * steps + t) * n + i) * n + j];
        }
    };
    std::vector<Layer> layers;
};

TrajectoryDump make_trajectory_dump(const SequenceWindow& window, const PredictionSet* predictions);
std::string format_trajectory_dump(const TrajectoryDump& dump);
TrajectoryDump parse_trajectory_dump(const std::string& text);

AttentionDump make_attention_dump(const SequenceWindow& window, const AttentionRecord& record);
std::string format_attention_dump(const AttentionDump& dump);
AttentionDump parse_attention_dump(const std::string& text);

enum class PlotKind { trajectories, samples, attention };
PlotKind parse_plot_kind(const std::string& s);

struct AttentionView {
    std::size_t layer = 0;
    std::size_t head = 0;
    std::size_t step = 0;    // observed step drawn
    std::size_t focal = 0;   // pedestrian whose attention row is drawn
};

/// Observed (red, solid), ground truth (blue, solid), predictions (yellow, dashed).
/// `trajectories` draws the first sample only; `samples` draws all of them.
std::string render_trajectories_svg(const TrajectoryDump& dump, bool all_samples);
/// Circles at each pedestrian's position at `step`, radius scaled by the focal row's weight.
std::string render_attention_svg(const AttentionDump& dump, const AttentionView& view);

/// Reads a dump from `in` and writes the SVG to `out`. Throws IoError when either path fails.
void emit_plot(PlotKind kind, const std::filesystem::path& in, const std::filesystem::path& out,
               const AttentionView& view = {});

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gtcn
