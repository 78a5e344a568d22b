#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gtcn {

enum class Variant { graphtcn, graphtcn_g, no_efgat, vanilla_gat };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// One graph attentional layer: K heads of width F1 each.
struct GalConfig {
    std::size_t heads = 1;
    std::size_t per_head_out = 16;

    std::size_t out_width() const { return heads * per_head_out; }
};

struct TcnConfig {
    std::size_t layers = 4;
    std::size_t kernel = 3;
    std::size_t channels = 16;
    std::vector<std::size_t> dilations{1, 1, 1, 1};
};

/// Weights of the variety and KL terms; lambda2 switches value after `switch_epoch`.
struct LossWeights {
    double lambda1 = 1.0;
    double lambda2_early = 0.5;
    int switch_epoch = 15;
    double lambda2_late = 0.2;

    double lambda2(int epoch) const { return epoch <= switch_epoch ? lambda2_early : lambda2_late; }
};

struct ModelConfig {
    static constexpr int kVersion = 1;

    std::size_t t_obs = 8;
    std::size_t t_pred = 12;
    std::size_t embed = 64;
    GalConfig gal1{2, 16};
    GalConfig gal2{1, 32};
    std::size_t f2 = 16;  // TCN channels
    std::size_t f3 = 4;   // shared noise width
    std::size_t f4 = 64;  // future encoding / latent width
    std::size_t tcn_layers = 4;
    std::size_t tcn_kernel = 3;
    std::vector<std::size_t> tcn_dilations{1, 1, 1, 1};
    std::size_t samples = 4;  // M
    Variant variant = Variant::graphtcn;
    double lr = 1e-4;
    std::size_t epochs = 50;
    LossWeights loss;
    std::uint64_t seed = 0;
    std::int64_t frame_step = 10;
    std::size_t stride = 1;
    bool separate_gate = false;      // distinct gate/value transforms in the node gate
    bool residual_identity = false;  // identity graph residual where widths agree
    double leaky_slope = 0.2;

    TcnConfig tcn() const { return {tcn_layers, tcn_kernel, f2, tcn_dilations}; }
    /// Width of the spatial encoder output fed into the TCN.
    std::size_t spatial_width() const { return variant == Variant::no_efgat ? embed : gal2.out_width(); }
    bool uses_efgat() const { return variant != Variant::no_efgat; }
    bool uses_edge_features() const { return variant == Variant::graphtcn || variant == Variant::graphtcn_g; }
    bool uses_cvae() const { return variant == Variant::graphtcn_g; }

    /// Throws ConfigError on any non-positive extent or inconsistent field.
    void validate() const;
};

/// Flat "key = value" text; '#' starts a comment. Unknown keys are rejected.
/// Keys absent from the text keep their defaults.
ModelConfig parse_config(const std::string& text);
ModelConfig load_config(const std::filesystem::path& path);
/// Every key, in a fixed order, with round-trip exact numbers.
std::string to_text(const ModelConfig& config);

}  // namespace gtcn
