#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graphtcn/tensor.hpp"

namespace gtcn {

/// One annotation: a pedestrian's world position (meters) at a raw frame.
struct RawRecord {
    std::int64_t frame = 0;
    std::int64_t ped_id = 0;
    double x = 0.0;
    double y = 0.0;

    bool operator==(const RawRecord&) const = default;
};

/// A scene slice of T_obs + T_pred resampled frames with every pedestrian
/// present throughout.
struct SequenceWindow {
    std::string scene_name;
    std::int64_t start_frame = 0;
    std::size_t t_obs = 0;
    std::size_t t_pred = 0;
    Tensor positions;  // [N, T_obs + T_pred, 2]
    std::vector<std::int64_t> ped_ids;

    std::size_t num_peds() const { return ped_ids.size(); }
    /// [N, T_obs, 2]
    Tensor observed() const;
    /// [N, T_pred, 2]
    Tensor future() const;
    /// Last observed position of each pedestrian, [N, 2].
    Tensor origin() const;
};

struct Split {
    std::vector<std::string> train_scenes;
    std::string test_scene;
};

/// Reads whitespace-separated "frame ped_id x y" lines. Lines starting with '#'
/// and blank lines are skipped; extra trailing columns are ignored.
std::vector<RawRecord> parse_trajectory_file(const std::filesystem::path& path);
std::vector<RawRecord> parse_trajectory_text(const std::string& text);

/// Keeps records whose frame lies on the stride grid anchored at the minimum frame.
std::vector<RawRecord> resample_frames(const std::vector<RawRecord>& records, std::int64_t frame_step);

/// Sliding windows over consecutive distinct frames of already-resampled records.
std::vector<SequenceWindow> extract_windows(const std::vector<RawRecord>& records, std::size_t t_obs,
                                            std::size_t t_pred, std::size_t stride,
                                            const std::string& scene_name = {});

/// One split per scene, holding it out as the test scene.
std::vector<Split> make_splits(const std::vector<std::string>& scenes);

/// Per-pedestrian observed features (x, y, dx, dy): [N, T_obs, 4], with (dx, dy) = 0 at the first step.
Tensor build_features(const SequenceWindow& window);

/// Scene files under a data directory: every `<scene>.txt` directly inside it, and
/// every sub-directory `<scene>/` holding one or more `.txt` recordings.
struct SceneSource {
    std::string name;
    std::vector<std::filesystem::path> files;
};
std::vector<SceneSource> discover_scenes(const std::filesystem::path& data_dir);

struct WindowingOptions {
    std::size_t t_obs = 8;
    std::size_t t_pred = 12;
    std::int64_t frame_step = 10;
    std::size_t stride = 1;
};

/// Parses, resamples, and windows every recording of a scene, in file order.
std::vector<SequenceWindow> load_scene_windows(const SceneSource& scene, const WindowingOptions& options);

}  // namespace gtcn
