#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "graphtcn/data.hpp"
#include "graphtcn/errors.hpp"

using namespace gtcn;
namespace fs = std::filesystem;

namespace {

std::string track(std::int64_t ped, std::int64_t first_frame, std::size_t count, double x0 = 0.0, double vx = 0.5,
                  std::int64_t step = 10) {
    std::string out;
    for (std::size_t k = 0; k < count; ++k)
        out += std::to_string(first_frame + static_cast<std::int64_t>(k) * step) + " " + std::to_string(ped) + " " +
               std::to_string(x0 + vx * static_cast<double>(k)) + " 1.0\n";
    return out;
}

}  // namespace

TEST_CASE("parse_trajectory_text") {
    SUBCASE("one record") {
        const auto r = parse_trajectory_text("0 1 7.23 4.91\n");
        REQUIRE(r.size() == 1);
        CHECK(r[0] == RawRecord{0, 1, 7.23, 4.91});
    }
    SUBCASE("empty input") { CHECK(parse_trajectory_text("").empty()); }
    SUBCASE("malformed coordinate reports the line") {
        try {
            parse_trajectory_text("0 1 abc 4\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 1);
        }
        try {
            parse_trajectory_text("# header\n0 1 2 3\n\n10 1 2\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
        }
    }
    SUBCASE("comments, tabs, float ids and extra columns") {
        const auto r = parse_trajectory_text("# c\n780.0\t1.0\t8.46\t3.59\textra\n  \n790 1 -8.5e-1 +3\n");
        REQUIRE(r.size() == 2);
        CHECK(r[0] == RawRecord{780, 1, 8.46, 3.59});
        CHECK(r[1] == RawRecord{790, 1, -0.85, 3.0});
    }
    SUBCASE("order is preserved") {
        const auto r = parse_trajectory_text("20 2 0 0\n0 1 0 0\n10 3 0 0\n");
        CHECK(r[0].frame == 20);
        CHECK(r[1].frame == 0);
        CHECK(r[2].ped_id == 3);
    }
    CHECK_THROWS_AS(parse_trajectory_text("0 1 1 1\n0 1 2 2\n"), DuplicateRecordError);
    CHECK_THROWS_AS(parse_trajectory_text("-1 1 1 1\n"), ParseError);
    CHECK_THROWS_AS(parse_trajectory_text("0 1.5 1 1\n"), ParseError);
    CHECK_THROWS_AS(parse_trajectory_text("0 1 nan 1\n"), ParseError);
    CHECK_THROWS_AS(parse_trajectory_file("/nonexistent/scene.txt"), IoError);
}

TEST_CASE("resample_frames") {
    auto frames = [](const std::vector<RawRecord>& rs) {
        std::vector<std::int64_t> f;
        for (const auto& r : rs) f.push_back(r.frame);
        return f;
    };
    const auto four = parse_trajectory_text("0 1 0 0\n10 1 0 0\n20 1 0 0\n30 1 0 0\n");
    CHECK(frames(resample_frames(four, 10)) == std::vector<std::int64_t>{0, 10, 20, 30});
    const auto odd = parse_trajectory_text("0 1 0 0\n5 1 0 0\n10 1 0 0\n");
    CHECK(frames(resample_frames(odd, 10)) == std::vector<std::int64_t>{0, 10});
    CHECK(resample_frames(odd, 1) == odd);
    const auto shifted = parse_trajectory_text("13 1 0 0\n18 1 0 0\n23 1 0 0\n");
    CHECK(frames(resample_frames(shifted, 10)) == std::vector<std::int64_t>{13, 23});
    CHECK_THROWS_AS(resample_frames(four, 0), ConfigError);
}

TEST_CASE("extract_windows") {
    SUBCASE("exactly one window at the boundary") {
        const auto w = extract_windows(parse_trajectory_text(track(1, 0, 20)), 8, 12, 1);
        REQUIRE(w.size() == 1);
        CHECK(w[0].num_peds() == 1);
        CHECK(w[0].positions.shape() == Shape{1, 20, 2});
    }
    SUBCASE("partial presence excludes the pedestrian") {
        const auto w = extract_windows(parse_trajectory_text(track(1, 0, 20) + track(2, 100, 10)), 8, 12, 1);
        REQUIRE(w.size() == 1);
        CHECK(w[0].ped_ids == std::vector<std::int64_t>{1});
    }
    SUBCASE("21 frames give two windows") {
        const auto w = extract_windows(parse_trajectory_text(track(1, 0, 21)), 8, 12, 1);
        REQUIRE(w.size() == 2);
        CHECK(w[0].start_frame == 0);
        CHECK(w[1].start_frame == 10);
    }
    SUBCASE("window count arithmetic") {
        for (std::size_t frames : {19, 20, 25, 40}) {
            for (std::size_t stride : {1, 2, 3}) {
                const auto w = extract_windows(parse_trajectory_text(track(1, 0, frames)), 8, 12, stride);
                const std::size_t expected = frames >= 20 ? (frames - 20 + 1) / stride : 0;
                CHECK(w.size() == expected);
            }
        }
    }
    SUBCASE("windows without a full-span pedestrian are dropped") {
        const auto w = extract_windows(parse_trajectory_text(track(1, 0, 12) + track(2, 120, 12)), 8, 12, 1);
        CHECK(w.empty());
    }
    SUBCASE("flattening reproduces the source positions") {
        const std::string text = track(3, 0, 24, 1.0, 0.25) + track(1, 20, 22, -2.0, 0.75);
        const auto records = parse_trajectory_text(text);
        const auto windows = extract_windows(records, 8, 12, 1, "s");
        REQUIRE_FALSE(windows.empty());
        for (const auto& w : windows) {
            CHECK(w.scene_name == "s");
            for (std::size_t i = 0; i < w.num_peds(); ++i)
                for (std::size_t t = 0; t < 20; ++t) {
                    const std::int64_t frame = w.start_frame + static_cast<std::int64_t>(t) * 10;
                    auto it = std::find_if(records.begin(), records.end(), [&](const RawRecord& r) {
                        return r.frame == frame && r.ped_id == w.ped_ids[i];
                    });
                    REQUIRE(it != records.end());
                    CHECK(w.positions.at({i, t, 0}) == it->x);
                    CHECK(w.positions.at({i, t, 1}) == it->y);
                }
        }
        // pedestrians are ordered by id
        CHECK(windows[2].ped_ids == std::vector<std::int64_t>{1, 3});
    }
    CHECK_THROWS_AS(extract_windows({}, 0, 12, 1), ConfigError);
}

TEST_CASE("observed, future and origin views") {
    const auto w = extract_windows(parse_trajectory_text(track(1, 0, 20, 0.0, 0.5)), 8, 12, 1)[0];
    CHECK(w.observed().shape() == Shape{1, 8, 2});
    CHECK(w.future().shape() == Shape{1, 12, 2});
    CHECK(w.origin().values() == std::vector<double>{3.5, 1.0});
    CHECK(w.future().at({0, 0, 0}) == 4.0);
}

TEST_CASE("make_splits") {
    const auto five = make_splits({"eth", "hotel", "univ", "zara1", "zara2"});
    REQUIRE(five.size() == 5);
    for (const auto& s : five) {
        CHECK(s.train_scenes.size() == 4);
        CHECK(std::find(s.train_scenes.begin(), s.train_scenes.end(), s.test_scene) == s.train_scenes.end());
    }
    CHECK(five[2].test_scene == "univ");
    CHECK(make_splits({"a", "b"}).size() == 2);
    CHECK_THROWS_AS(make_splits({"a"}), ConfigError);
}

TEST_CASE("build_features") {
    SUBCASE("stationary pedestrian") {
        const auto w = extract_windows(parse_trajectory_text(track(1, 0, 20, 2.0, 0.0)), 8, 12, 1)[0];
        const Tensor f = build_features(w);
        CHECK(f.shape() == Shape{1, 8, 4});
        for (std::size_t t = 0; t < 8; ++t) {
            CHECK(f.at({0, t, 2}) == 0.0);
            CHECK(f.at({0, t, 3}) == 0.0);
        }
    }
    SUBCASE("difference arithmetic") {
        std::string text = "0 1 0 0\n10 1 1 0\n";
        for (int k = 2; k < 20; ++k) text += std::to_string(k * 10) + " 1 " + std::to_string(k) + " 0\n";
        const auto w = extract_windows(parse_trajectory_text(text), 8, 12, 1)[0];
        const Tensor f = build_features(w);
        CHECK(f.at({0, 1, 0}) == 1.0);
        CHECK(f.at({0, 1, 1}) == 0.0);
        CHECK(f.at({0, 1, 2}) == 1.0);
        CHECK(f.at({0, 1, 3}) == 0.0);
        CHECK(f.at({0, 0, 2}) == 0.0);
        CHECK(f.at({0, 0, 3}) == 0.0);
    }
    SUBCASE("deltas telescope") {
        const auto w = extract_windows(parse_trajectory_text(track(1, 0, 20, 0.125, 0.375) + track(2, 0, 20, 4.0, -0.5)),
                                       8, 12, 1)[0];
        const Tensor f = build_features(w);
        for (std::size_t i = 0; i < 2; ++i) {
            double dx = 0.0;
            for (std::size_t t = 1; t < 8; ++t) dx += f.at({i, t, 2});
            CHECK(dx == w.positions.at({i, 7, 0}) - w.positions.at({i, 0, 0}));
        }
    }
}

TEST_CASE("scene discovery and loading") {
    const fs::path dir = fs::temp_directory_path() / "gtcn_test_scenes";
    fs::remove_all(dir);
    fs::create_directories(dir / "univ");
    std::ofstream(dir / "eth.txt") << track(1, 0, 21);
    std::ofstream(dir / "univ" / "part_a.txt") << track(1, 0, 20);
    std::ofstream(dir / "univ" / "part_b.txt") << track(7, 0, 22);
    std::ofstream(dir / "notes.md") << "ignored";

    const auto scenes = discover_scenes(dir);
    REQUIRE(scenes.size() == 2);
    CHECK(scenes[0].name == "eth");
    CHECK(scenes[1].name == "univ");
    CHECK(scenes[1].files.size() == 2);

    const auto windows = load_scene_windows(scenes[1], WindowingOptions{});
    CHECK(windows.size() == 1 + 3);
    CHECK(windows.back().scene_name == "univ");
    fs::remove_all(dir);
    CHECK_THROWS_AS(discover_scenes(dir), DataError);
}

TEST_CASE("bundled fixtures load") {
    const fs::path dir = GTCN_FIXTURES;
    const auto scenes = discover_scenes(dir / "loo");
    CHECK(scenes.size() == 5);
    for (const auto& s : discover_scenes(dir)) {
        if (s.name == "zara1_subset") CHECK(load_scene_windows(s, {}).size() == 100);
        if (s.name == "linear") CHECK(load_scene_windows(s, {}).size() == 1);
    }
}
