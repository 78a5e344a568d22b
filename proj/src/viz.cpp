#include "graphtcn/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "graphtcn/errors.hpp"

namespace gtcn {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::vector<Point> points_of(std::span<const double> xy, std::size_t offset, std::size_t count) {
    std::vector<Point> out(count);
    for (std::size_t t = 0; t < count; ++t) out[t] = {xy[(offset + t) * 2], xy[(offset + t) * 2 + 1]};
    return out;
}

struct Line {
    std::size_t number;
    std::vector<std::string> fields;
};

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::istringstream ls(line);
        std::vector<std::string> fields;
        for (std::string f; ls >> f;) fields.push_back(f);
        if (fields.empty() || fields[0][0] == '#') continue;
        out.push_back({n, std::move(fields)});
    }
    return out;
}

std::size_t to_index(const Line& l, std::size_t k) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(l.fields.at(k), &used);
        if (used != l.fields[k].size()) throw std::invalid_argument("trailing");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ParseError("expected a non-negative integer in field " + std::to_string(k + 1), l.number);
    }
}

double to_real(const Line& l, std::size_t k) {
    try {
        std::size_t used = 0;
        const double v = std::stod(l.fields.at(k), &used);
        if (used != l.fields[k].size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a real number in field " + std::to_string(k + 1), l.number);
    }
}

void expect_fields(const Line& l, std::size_t n) {
    if (l.fields.size() != n)
        throw ParseError("record '" + l.fields[0] + "' needs " + std::to_string(n) + " fields", l.number);
}

void check(bool ok, const Line& l, const std::string& what) {
    if (!ok) throw ParseError(what, l.number);
}

// Maps world coordinates into a fixed canvas with y pointing up.
class Canvas {
   public:
    static constexpr double kSize = 640.0;
    static constexpr double kMargin = 32.0;

    explicit Canvas(const std::vector<Point>& all) {
        for (const auto& p : all) {
            lo_x_ = std::min(lo_x_, p.x);
            hi_x_ = std::max(hi_x_, p.x);
            lo_y_ = std::min(lo_y_, p.y);
            hi_y_ = std::max(hi_y_, p.y);
        }
        if (all.empty()) lo_x_ = hi_x_ = lo_y_ = hi_y_ = 0.0;
        const double span = std::max({hi_x_ - lo_x_, hi_y_ - lo_y_, 1e-9});
        scale_ = (kSize - 2 * kMargin) / span;
    }

    double sx(double x) const { return kMargin + (x - lo_x_) * scale_; }
    double sy(double y) const { return kSize - kMargin - (y - lo_y_) * scale_; }
    double scale() const { return scale_; }

   private:
    double lo_x_ = std::numeric_limits<double>::infinity();
    double hi_x_ = -std::numeric_limits<double>::infinity();
    double lo_y_ = std::numeric_limits<double>::infinity();
    double hi_y_ = -std::numeric_limits<double>::infinity();
    double scale_ = 1.0;
};

std::string svg_open() {
    const std::string s = px(Canvas::kSize);
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + s + "\" height=\"" + s + "\" viewBox=\"0 0 " + s +
           " " + s + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string polyline(const Canvas& c, const std::vector<Point>& pts, const std::string& color, bool dashed,
                     const std::string& cls) {
    std::string out = "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"";
    if (dashed) out += " stroke-dasharray=\"6 4\"";
    out += " points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k) out += ' ';
        out += px(c.sx(pts[k].x)) + "," + px(c.sy(pts[k].y));
    }
    return out + "\"/>\n";
}

}  // namespace

TrajectoryDump make_trajectory_dump(const SequenceWindow& window, const PredictionSet* predictions) {
    TrajectoryDump d;
    const std::size_t n = window.num_peds();
    const std::size_t span = window.t_obs + window.t_pred;
    const auto pos = window.positions.data();
    for (std::size_t i = 0; i < n; ++i) {
        d.observed.push_back(points_of(pos.subspan(i * span * 2, span * 2), 0, window.t_obs));
        d.truth.push_back(points_of(pos.subspan(i * span * 2, span * 2), window.t_obs, window.t_pred));
    }
    if (predictions) {
        const auto traj = predictions->trajectories.data();
        const std::size_t tp = predictions->trajectories.extent(2);
        for (std::size_t m = 0; m < predictions->sample_count(); ++m) {
            std::vector<std::vector<Point>> sample;
            for (std::size_t i = 0; i < n; ++i) sample.push_back(points_of(traj.subspan((m * n + i) * tp * 2, tp * 2), 0, tp));
            d.samples.push_back(std::move(sample));
        }
    }
    return d;
}

std::string format_trajectory_dump(const TrajectoryDump& d) {
    const std::size_t n = d.observed.size();
    const std::size_t t_obs = n ? d.observed[0].size() : 0;
    std::size_t t_pred = 0;
    if (!d.truth.empty()) t_pred = d.truth[0].size();
    else if (!d.samples.empty() && n) t_pred = d.samples[0][0].size();

    std::string out = "# kind\tfields\nmeta\t" + std::to_string(n) + "\t" + std::to_string(t_obs) + "\t" +
                      std::to_string(t_pred) + "\t" + std::to_string(d.samples.size()) + "\n";
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < d.observed[i].size(); ++t)
            out += "obs\t" + std::to_string(i) + "\t" + std::to_string(t) + "\t" + num(d.observed[i][t].x) + "\t" +
                   num(d.observed[i][t].y) + "\n";
    for (std::size_t i = 0; i < d.truth.size(); ++i)
        for (std::size_t t = 0; t < d.truth[i].size(); ++t)
            out += "gt\t" + std::to_string(i) + "\t" + std::to_string(t) + "\t" + num(d.truth[i][t].x) + "\t" +
                   num(d.truth[i][t].y) + "\n";
    for (std::size_t m = 0; m < d.samples.size(); ++m)
        for (std::size_t i = 0; i < d.samples[m].size(); ++i)
            for (std::size_t t = 0; t < d.samples[m][i].size(); ++t)
                out += "pred\t" + std::to_string(m) + "\t" + std::to_string(i) + "\t" + std::to_string(t) + "\t" +
                       num(d.samples[m][i][t].x) + "\t" + num(d.samples[m][i][t].y) + "\n";
    return out;
}

TrajectoryDump parse_trajectory_dump(const std::string& text) {
    const auto lines = tokenize(text);
    if (lines.empty() || lines[0].fields[0] != "meta") throw ParseError("prediction dump must start with 'meta'", 1);
    const Line& meta = lines[0];
    expect_fields(meta, 5);
    const std::size_t n = to_index(meta, 1), t_obs = to_index(meta, 2), t_pred = to_index(meta, 3),
                      m = to_index(meta, 4);

    TrajectoryDump d;
    d.observed.assign(n, std::vector<Point>(t_obs));
    std::vector<std::vector<bool>> gt_seen(n, std::vector<bool>(t_pred, false));
    d.truth.assign(n, std::vector<Point>(t_pred));
    d.samples.assign(m, std::vector<std::vector<Point>>(n, std::vector<Point>(t_pred)));
    bool any_gt = false;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const Line& l = lines[k];
        const std::string& kind = l.fields[0];
        if (kind == "obs" || kind == "gt") {
            expect_fields(l, 5);
            const std::size_t i = to_index(l, 1), t = to_index(l, 2);
            const std::size_t limit = kind == "obs" ? t_obs : t_pred;
            check(i < n && t < limit, l, "index out of range");
            auto& target = kind == "obs" ? d.observed : d.truth;
            target[i][t] = {to_real(l, 3), to_real(l, 4)};
            if (kind == "gt") any_gt = true;
        } else if (kind == "pred") {
            expect_fields(l, 6);
            const std::size_t s = to_index(l, 1), i = to_index(l, 2), t = to_index(l, 3);
            check(s < m && i < n && t < t_pred, l, "index out of range");
            d.samples[s][i][t] = {to_real(l, 4), to_real(l, 5)};
        } else {
            throw ParseError("unknown record '" + kind + "'", l.number);
        }
    }
    if (!any_gt) d.truth.clear();
    return d;
}

AttentionDump make_attention_dump(const SequenceWindow& window, const AttentionRecord& record) {
    AttentionDump d;
    d.peds = window.num_peds();
    d.steps = window.t_obs;
    d.ped_ids = window.ped_ids;
    const std::size_t span = window.t_obs + window.t_pred;
    const auto pos = window.positions.data();
    for (std::size_t i = 0; i < d.peds; ++i) d.positions.push_back(points_of(pos.subspan(i * span * 2, span * 2), 0, d.steps));
    for (const auto& layer : record.layers) {
        if (layer.rank() != 4 || layer.extent(1) != d.steps || layer.extent(2) != d.peds || layer.extent(3) != d.peds)
            throw DimensionError("attention layer " + shape_str(layer.shape()) + " does not match the window");
        d.layers.push_back({layer.extent(0), layer.values()});
    }
    return d;
}

std::string format_attention_dump(const AttentionDump& d) {
    std::string out = "# kind\tfields\nmeta\t" + std::to_string(d.peds) + "\t" + std::to_string(d.steps) + "\t" +
                      std::to_string(d.layers.size()) + "\n";
    for (std::size_t i = 0; i < d.ped_ids.size(); ++i)
        out += "ped\t" + std::to_string(i) + "\t" + std::to_string(d.ped_ids[i]) + "\n";
    for (std::size_t i = 0; i < d.positions.size(); ++i)
        for (std::size_t t = 0; t < d.positions[i].size(); ++t)
            out += "pos\t" + std::to_string(i) + "\t" + std::to_string(t) + "\t" + num(d.positions[i][t].x) + "\t" +
                   num(d.positions[i][t].y) + "\n";
    for (std::size_t l = 0; l < d.layers.size(); ++l)
        for (std::size_t h = 0; h < d.layers[l].heads; ++h)
            for (std::size_t t = 0; t < d.steps; ++t)
                for (std::size_t i = 0; i < d.peds; ++i)
                    for (std::size_t j = 0; j < d.peds; ++j)
                        out += "attn\t" + std::to_string(l) + "\t" + std::to_string(h) + "\t" + std::to_string(t) +
                               "\t" + std::to_string(i) + "\t" + std::to_string(j) + "\t" +
                               num(d.layers[l].at(h, t, i, j, d.peds, d.steps)) + "\n";
    return out;
}

AttentionDump parse_attention_dump(const std::string& text) {
    const auto lines = tokenize(text);
    if (lines.empty() || lines[0].fields[0] != "meta") throw ParseError("attention dump must start with 'meta'", 1);
    expect_fields(lines[0], 4);
    AttentionDump d;
    d.peds = to_index(lines[0], 1);
    d.steps = to_index(lines[0], 2);
    const std::size_t layers = to_index(lines[0], 3);
    d.ped_ids.assign(d.peds, 0);
    d.positions.assign(d.peds, std::vector<Point>(d.steps));
    d.layers.resize(layers);

    struct Entry {
        std::size_t l, h, t, i, j;
        double a;
    };
    std::vector<Entry> entries;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const Line& line = lines[k];
        const std::string& kind = line.fields[0];
        if (kind == "ped") {
            expect_fields(line, 3);
            const std::size_t i = to_index(line, 1);
            check(i < d.peds, line, "index out of range");
            d.ped_ids[i] = static_cast<std::int64_t>(to_index(line, 2));
        } else if (kind == "pos") {
            expect_fields(line, 5);
            const std::size_t i = to_index(line, 1), t = to_index(line, 2);
            check(i < d.peds && t < d.steps, line, "index out of range");
            d.positions[i][t] = {to_real(line, 3), to_real(line, 4)};
        } else if (kind == "attn") {
            expect_fields(line, 7);
            Entry e{to_index(line, 1), to_index(line, 2), to_index(line, 3), to_index(line, 4), to_index(line, 5),
                    to_real(line, 6)};
            check(e.l < layers && e.t < d.steps && e.i < d.peds && e.j < d.peds, line, "index out of range");
            d.layers[e.l].heads = std::max(d.layers[e.l].heads, e.h + 1);
            entries.push_back(e);
        } else {
            throw ParseError("unknown record '" + kind + "'", line.number);
        }
    }
    for (auto& layer : d.layers) layer.alpha.assign(layer.heads * d.steps * d.peds * d.peds, 0.0);
    for (const auto& e : entries)
        d.layers[e.l].alpha[((e.h * d.steps + e.t) * d.peds + e.i) * d.peds + e.j] = e.a;
    return d;
}

PlotKind parse_plot_kind(const std::string& s) {
    if (s == "trajectories") return PlotKind::trajectories;
    if (s == "samples") return PlotKind::samples;
    if (s == "attention") return PlotKind::attention;
    throw ConfigError("unknown plot kind '" + s + "' (expected trajectories, samples or attention)");
}

std::string render_trajectories_svg(const TrajectoryDump& d, bool all_samples) {
    const std::size_t drawn = all_samples ? d.samples.size() : std::min<std::size_t>(d.samples.size(), 1);
    std::vector<Point> all;
    for (const auto& p : d.observed) all.insert(all.end(), p.begin(), p.end());
    for (const auto& p : d.truth) all.insert(all.end(), p.begin(), p.end());
    for (std::size_t m = 0; m < drawn; ++m)
        for (const auto& p : d.samples[m]) all.insert(all.end(), p.begin(), p.end());
    const Canvas c(all);

    std::string out = svg_open();
    for (std::size_t i = 0; i < d.observed.size(); ++i) {
        // predictions and ground truth start at the last observed point
        const Point last = d.observed[i].empty() ? Point{} : d.observed[i].back();
        out += polyline(c, d.observed[i], "red", false, "observed");
        if (i < d.truth.size()) {
            std::vector<Point> gt{last};
            gt.insert(gt.end(), d.truth[i].begin(), d.truth[i].end());
            out += polyline(c, gt, "blue", false, "truth");
        }
        for (std::size_t m = 0; m < drawn; ++m) {
            std::vector<Point> pr{last};
            pr.insert(pr.end(), d.samples[m][i].begin(), d.samples[m][i].end());
            out += polyline(c, pr, "#e6b800", true, "prediction");
        }
    }
    return out + "</svg>\n";
}

std::string render_attention_svg(const AttentionDump& d, const AttentionView& v) {
    if (v.layer >= d.layers.size()) throw ConfigError("attention layer " + std::to_string(v.layer) + " not in dump");
    const auto& layer = d.layers[v.layer];
    if (v.head >= layer.heads || v.step >= d.steps || v.focal >= d.peds)
        throw ConfigError("attention head, step or pedestrian out of range");

    std::vector<Point> all;
    for (const auto& p : d.positions) all.insert(all.end(), p.begin(), p.end());
    const Canvas c(all);

    std::string out = svg_open();
    for (std::size_t i = 0; i < d.peds; ++i)
        out += polyline(c, std::vector<Point>(d.positions[i].begin(), d.positions[i].begin() + v.step + 1), "red",
                        false, "observed");
    for (std::size_t j = 0; j < d.peds; ++j) {
        const Point p = d.positions[j][v.step];
        const double a = layer.at(v.head, v.step, v.focal, j, d.peds, d.steps);
        const double r = 4.0 + 28.0 * std::sqrt(std::max(a, 0.0));
        out += "<circle class=\"attention\" cx=\"" + px(c.sx(p.x)) + "\" cy=\"" + px(c.sy(p.y)) + "\" r=\"" + px(r) +
               "\" fill=\"" + (j == v.focal ? "blue" : "orange") + "\" fill-opacity=\"0.4\" stroke=\"black\"/>\n";
    }
    return out + "</svg>\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

void emit_plot(PlotKind kind, const std::filesystem::path& in, const std::filesystem::path& out,
               const AttentionView& view) {
    const std::string text = read_text_file(in);
    std::string svg;
    if (kind == PlotKind::attention)
        svg = render_attention_svg(parse_attention_dump(text), view);
    else
        svg = render_trajectories_svg(parse_trajectory_dump(text), kind == PlotKind::samples);
    write_text_file(out, svg);
}

}  // namespace gtcn
