#include "graphtcn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "graphtcn/errors.hpp"

namespace gtcn {

namespace {

bool parse_double(std::string_view token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Frame and pedestrian ids are written as "12" or "12.0" in public releases.
bool parse_index(std::string_view token, std::int64_t& out) {
    double v = 0.0;
    if (!parse_double(token, v) || v < 0.0 || v != std::floor(v) || v > 9.0e15) return false;
    out = static_cast<std::int64_t>(v);
    return true;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

}  // namespace

Tensor SequenceWindow::observed() const { return slice(positions, 1, 0, t_obs); }
Tensor SequenceWindow::future() const { return slice(positions, 1, t_obs, t_obs + t_pred); }
Tensor SequenceWindow::origin() const {
    return reshape(slice(positions, 1, t_obs - 1, t_obs), {num_peds(), 2});
}

std::vector<RawRecord> parse_trajectory_text(const std::string& text) {
    std::vector<RawRecord> records;
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_ws(line);
        if (fields.empty() || fields.front().front() == '#') continue;
        if (fields.size() < 4) throw ParseError("expected 'frame ped_id x y'", line_no);
        RawRecord r;
        if (!parse_index(fields[0], r.frame)) throw ParseError("bad frame index '" + std::string(fields[0]) + "'", line_no);
        if (!parse_index(fields[1], r.ped_id)) throw ParseError("bad pedestrian id '" + std::string(fields[1]) + "'", line_no);
        if (!parse_double(fields[2], r.x)) throw ParseError("bad x coordinate '" + std::string(fields[2]) + "'", line_no);
        if (!parse_double(fields[3], r.y)) throw ParseError("bad y coordinate '" + std::string(fields[3]) + "'", line_no);
        if (!seen.insert({r.frame, r.ped_id}).second)
            throw DuplicateRecordError("duplicate record for frame " + std::to_string(r.frame) + ", pedestrian " +
                                       std::to_string(r.ped_id) + " at line " + std::to_string(line_no));
        records.push_back(r);
    }
    return records;
}

std::vector<RawRecord> parse_trajectory_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trajectory_text(buf.str());
}

std::vector<RawRecord> resample_frames(const std::vector<RawRecord>& records, std::int64_t frame_step) {
    if (frame_step < 1) throw ConfigError("frame_step must be >= 1");
    if (records.empty()) return {};
    const auto base = std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
                          return a.frame < b.frame;
                      })->frame;
    std::vector<RawRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [&](const RawRecord& r) { return (r.frame - base) % frame_step == 0; });
    return out;
}

std::vector<SequenceWindow> extract_windows(const std::vector<RawRecord>& records, std::size_t t_obs,
                                            std::size_t t_pred, std::size_t stride,
                                            const std::string& scene_name) {
    if (t_obs == 0 || t_pred == 0 || stride == 0) throw ConfigError("t_obs, t_pred and stride must be >= 1");

    // frame -> (ped -> position)
    std::map<std::int64_t, std::map<std::int64_t, std::pair<double, double>>> by_frame;
    for (const auto& r : records) by_frame[r.frame][r.ped_id] = {r.x, r.y};
    std::vector<std::int64_t> frames;
    for (const auto& [f, _] : by_frame) frames.push_back(f);

    const std::size_t span = t_obs + t_pred;
    std::vector<SequenceWindow> windows;
    if (frames.size() < span) return windows;
    const std::size_t count = (frames.size() - span + 1) / stride;

    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t first = w * stride;
        std::vector<std::int64_t> peds;
        for (const auto& [ped, _] : by_frame[frames[first]]) {
            bool everywhere = true;
            for (std::size_t k = 1; k < span && everywhere; ++k)
                everywhere = by_frame[frames[first + k]].count(ped) != 0;
            if (everywhere) peds.push_back(ped);
        }
        if (peds.empty()) continue;

        std::vector<double> pos;
        pos.reserve(peds.size() * span * 2);
        for (auto ped : peds) {
            for (std::size_t k = 0; k < span; ++k) {
                const auto& xy = by_frame[frames[first + k]][ped];
                pos.push_back(xy.first);
                pos.push_back(xy.second);
            }
        }
        SequenceWindow win;
        win.scene_name = scene_name;
        win.start_frame = frames[first];
        win.t_obs = t_obs;
        win.t_pred = t_pred;
        win.positions = Tensor({peds.size(), span, 2}, std::move(pos));
        win.ped_ids = std::move(peds);
        windows.push_back(std::move(win));
    }
    return windows;
}

std::vector<Split> make_splits(const std::vector<std::string>& scenes) {
    if (scenes.size() < 2) throw ConfigError("leave-one-out needs at least two scenes");
    std::vector<Split> splits;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        Split s;
        s.test_scene = scenes[i];
        for (std::size_t j = 0; j < scenes.size(); ++j)
            if (j != i) s.train_scenes.push_back(scenes[j]);
        splits.push_back(std::move(s));
    }
    return splits;
}

Tensor build_features(const SequenceWindow& window) {
    const std::size_t n = window.num_peds();
    const std::size_t span = window.positions.extent(1);
    const std::size_t t_obs = window.t_obs;
    const auto pos = window.positions.data();
    std::vector<double> feats(n * t_obs * 4);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < t_obs; ++t) {
            const double* p = pos.data() + (i * span + t) * 2;
            double* f = feats.data() + (i * t_obs + t) * 4;
            f[0] = p[0];
            f[1] = p[1];
            f[2] = t == 0 ? 0.0 : p[0] - p[-2];
            f[3] = t == 0 ? 0.0 : p[1] - p[-1];
        }
    }
    return Tensor({n, t_obs, 4}, std::move(feats));
}

std::vector<SceneSource> discover_scenes(const std::filesystem::path& data_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(data_dir)) throw DataError("data directory not found: " + data_dir.string());
    std::vector<SceneSource> scenes;
    for (const auto& entry : fs::directory_iterator(data_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            scenes.push_back({entry.path().stem().string(), {entry.path()}});
        } else if (entry.is_directory()) {
            SceneSource s{entry.path().filename().string(), {}};
            for (const auto& f : fs::recursive_directory_iterator(entry.path()))
                if (f.is_regular_file() && f.path().extension() == ".txt") s.files.push_back(f.path());
            std::sort(s.files.begin(), s.files.end());
            if (!s.files.empty()) scenes.push_back(std::move(s));
        }
    }
    std::sort(scenes.begin(), scenes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return scenes;
}

std::vector<SequenceWindow> load_scene_windows(const SceneSource& scene, const WindowingOptions& options) {
    std::vector<SequenceWindow> out;
    for (const auto& file : scene.files) {
        auto records = resample_frames(parse_trajectory_file(file), options.frame_step);
        auto windows = extract_windows(records, options.t_obs, options.t_pred, options.stride, scene.name);
        std::move(windows.begin(), windows.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace gtcn
