#include "graphtcn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "graphtcn/errors.hpp"

namespace gtcn {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::graphtcn: return "graphtcn";
        case Variant::graphtcn_g: return "graphtcn_g";
        case Variant::no_efgat: return "no_efgat";
        case Variant::vanilla_gat: return "vanilla_gat";
    }
    return "graphtcn";
}

Variant parse_variant(const std::string& s) {
    if (s == "graphtcn") return Variant::graphtcn;
    if (s == "graphtcn_g") return Variant::graphtcn_g;
    if (s == "no_efgat") return Variant::no_efgat;
    if (s == "vanilla_gat") return Variant::vanilla_gat;
    throw ConfigError("unknown variant '" + s + "'");
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(t_obs, "t_obs");
    positive(t_pred, "t_pred");
    positive(embed, "embed");
    positive(gal1.heads, "gal1_heads");
    positive(gal1.per_head_out, "gal1_out");
    positive(gal2.heads, "gal2_heads");
    positive(gal2.per_head_out, "gal2_out");
    positive(f2, "f2");
    positive(f3, "f3");
    positive(f4, "f4");
    positive(tcn_layers, "tcn_layers");
    positive(tcn_kernel, "tcn_kernel");
    positive(samples, "samples");
    positive(stride, "stride");
    if (frame_step < 1) throw ConfigError("frame_step must be positive");
    if (tcn_dilations.size() != tcn_layers) throw ConfigError("tcn_dilations must list one value per TCN layer");
    for (auto d : tcn_dilations) positive(d, "tcn_dilations entry");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (loss.lambda1 < 0.0 || loss.lambda2_early < 0.0 || loss.lambda2_late < 0.0)
        throw ConfigError("loss weights must be non-negative");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("bad integer for " + key + ": '" + v + "'");
    return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("bad integer for " + key + ": '" + v + "'");
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("bad number for " + key + ": '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_size(key, trim(item)));
    return out;
}

std::string real_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Setter = std::function<void(ModelConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"config_version",
         [](ModelConfig&, const std::string& k, const std::string& v) {
             if (to_int(k, v) != ModelConfig::kVersion) throw ConfigError("unsupported config_version " + v);
         }},
        {"t_obs", [](ModelConfig& c, const std::string& k, const std::string& v) { c.t_obs = to_size(k, v); }},
        {"t_pred", [](ModelConfig& c, const std::string& k, const std::string& v) { c.t_pred = to_size(k, v); }},
        {"embed", [](ModelConfig& c, const std::string& k, const std::string& v) { c.embed = to_size(k, v); }},
        {"gal1_heads", [](ModelConfig& c, const std::string& k, const std::string& v) { c.gal1.heads = to_size(k, v); }},
        {"gal1_out", [](ModelConfig& c, const std::string& k, const std::string& v) { c.gal1.per_head_out = to_size(k, v); }},
        {"gal2_heads", [](ModelConfig& c, const std::string& k, const std::string& v) { c.gal2.heads = to_size(k, v); }},
        {"gal2_out", [](ModelConfig& c, const std::string& k, const std::string& v) { c.gal2.per_head_out = to_size(k, v); }},
        {"f2", [](ModelConfig& c, const std::string& k, const std::string& v) { c.f2 = to_size(k, v); }},
        {"f3", [](ModelConfig& c, const std::string& k, const std::string& v) { c.f3 = to_size(k, v); }},
        {"f4", [](ModelConfig& c, const std::string& k, const std::string& v) { c.f4 = to_size(k, v); }},
        {"tcn_layers", [](ModelConfig& c, const std::string& k, const std::string& v) { c.tcn_layers = to_size(k, v); }},
        {"tcn_kernel", [](ModelConfig& c, const std::string& k, const std::string& v) { c.tcn_kernel = to_size(k, v); }},
        {"tcn_dilations", [](ModelConfig& c, const std::string& k, const std::string& v) { c.tcn_dilations = to_list(k, v); }},
        {"samples", [](ModelConfig& c, const std::string& k, const std::string& v) { c.samples = to_size(k, v); }},
        {"variant", [](ModelConfig& c, const std::string&, const std::string& v) { c.variant = parse_variant(v); }},
        {"lr", [](ModelConfig& c, const std::string& k, const std::string& v) { c.lr = to_real(k, v); }},
        {"epochs", [](ModelConfig& c, const std::string& k, const std::string& v) { c.epochs = to_size(k, v); }},
        {"lambda1", [](ModelConfig& c, const std::string& k, const std::string& v) { c.loss.lambda1 = to_real(k, v); }},
        {"lambda2_early", [](ModelConfig& c, const std::string& k, const std::string& v) { c.loss.lambda2_early = to_real(k, v); }},
        {"lambda2_switch_epoch",
         [](ModelConfig& c, const std::string& k, const std::string& v) { c.loss.switch_epoch = static_cast<int>(to_int(k, v)); }},
        {"lambda2_late", [](ModelConfig& c, const std::string& k, const std::string& v) { c.loss.lambda2_late = to_real(k, v); }},
        {"seed", [](ModelConfig& c, const std::string& k, const std::string& v) { c.seed = to_size(k, v); }},
        {"frame_step", [](ModelConfig& c, const std::string& k, const std::string& v) { c.frame_step = to_int(k, v); }},
        {"stride", [](ModelConfig& c, const std::string& k, const std::string& v) { c.stride = to_size(k, v); }},
        {"separate_gate", [](ModelConfig& c, const std::string& k, const std::string& v) { c.separate_gate = to_bool(k, v); }},
        {"residual_identity",
         [](ModelConfig& c, const std::string& k, const std::string& v) { c.residual_identity = to_bool(k, v); }},
        {"leaky_slope", [](ModelConfig& c, const std::string& k, const std::string& v) { c.leaky_slope = to_real(k, v); }},
    };
    return table;
}

}  // namespace

ModelConfig parse_config(const std::string& text) {
    ModelConfig cfg;
    bool dilations_given = false;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        it->second(cfg, key, value);
        dilations_given = dilations_given || key == "tcn_dilations";
    }
    if (!dilations_given) cfg.tcn_dilations.assign(cfg.tcn_layers, 1);
    cfg.validate();
    return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_text(const ModelConfig& c) {
    std::ostringstream os;
    os << "config_version = " << ModelConfig::kVersion << '\n'
       << "t_obs = " << c.t_obs << '\n'
       << "t_pred = " << c.t_pred << '\n'
       << "embed = " << c.embed << '\n'
       << "gal1_heads = " << c.gal1.heads << '\n'
       << "gal1_out = " << c.gal1.per_head_out << '\n'
       << "gal2_heads = " << c.gal2.heads << '\n'
       << "gal2_out = " << c.gal2.per_head_out << '\n'
       << "f2 = " << c.f2 << '\n'
       << "f3 = " << c.f3 << '\n'
       << "f4 = " << c.f4 << '\n'
       << "tcn_layers = " << c.tcn_layers << '\n'
       << "tcn_kernel = " << c.tcn_kernel << '\n'
       << "tcn_dilations = ";
    for (std::size_t i = 0; i < c.tcn_dilations.size(); ++i) os << (i ? "," : "") << c.tcn_dilations[i];
    os << '\n'
       << "samples = " << c.samples << '\n'
       << "variant = " << to_string(c.variant) << '\n'
       << "lr = " << real_str(c.lr) << '\n'
       << "epochs = " << c.epochs << '\n'
       << "lambda1 = " << real_str(c.loss.lambda1) << '\n'
       << "lambda2_early = " << real_str(c.loss.lambda2_early) << '\n'
       << "lambda2_switch_epoch = " << c.loss.switch_epoch << '\n'
       << "lambda2_late = " << real_str(c.loss.lambda2_late) << '\n'
       << "seed = " << c.seed << '\n'
       << "frame_step = " << c.frame_step << '\n'
       << "stride = " << c.stride << '\n'
       << "separate_gate = " << (c.separate_gate ? "true" : "false") << '\n'
       << "residual_identity = " << (c.residual_identity ? "true" : "false") << '\n'
       << "leaky_slope = " << real_str(c.leaky_slope) << '\n';
    return os.str();
}

}  // namespace gtcn
