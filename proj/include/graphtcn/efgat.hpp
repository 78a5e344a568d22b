#pragma once

// Edge-feature graph attention: per time step, pedestrians attend to each other
// with logits built from node scores and embedded relative displacements.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "graphtcn/config.hpp"
#include "graphtcn/params.hpp"
#include "graphtcn/tensor.hpp"

namespace gtcn {

struct GalHeadParams {
    Tensor w_src;   // [F_in, 1]  score of the attending node
    Tensor w_dst;   // [F_in, 1]  score of the attended neighbor
    std::optional<Tensor> w_edge;  // [F1, 1]  score of the embedded displacement
    Tensor W_h;     // [F_in, F1]
    Tensor b_h;     // [F1]
    std::optional<Tensor> W_v;  // value transform when gate and value are separate
    std::optional<Tensor> b_v;
};

struct GalParams {
    std::optional<Tensor> edge_W;  // [2, F1]
    std::optional<Tensor> edge_b;  // [F1]
    std::vector<GalHeadParams> heads;
    std::optional<Tensor> res_W;   // [F_in, K*F1]; absent means identity residual
    std::optional<Tensor> res_b;
};

struct EfgatParams {
    Tensor embed_W;  // [4, embed]
    Tensor embed_b;  // [embed]
    GalParams gal1;
    GalParams gal2;
};

struct GalOptions {
    bool edge_features = true;
    bool separate_gate = false;
    bool residual_identity = false;
    double leaky_slope = kLeakySlope;
};

/// Registers the parameters of one GAL under `prefix` and returns views onto them.
GalParams register_gal(ParameterStore& store, const std::string& prefix, std::size_t in_dim,
                       const GalConfig& config, const GalOptions& options, std::mt19937_64& rng);
GalParams view_gal(const ParameterStore& store, const std::string& prefix, std::size_t heads);

/// Displacements positions[i] - positions[j]: [..., N, 2] -> [..., N, N, 2]. Not differentiable.
Tensor pairwise_displacements(const Tensor& positions);

/// Embedded displacement of every ordered pair: [..., N, 2] -> [..., N, N, F1].
Tensor compute_edge_features(const Tensor& positions, const Tensor& edge_W, const Tensor& edge_b);

/// Attention of each node over its neighborhood: [..., N, N], rows sum to 1.
/// `edge_feats` may be omitted (plain GAT logits).
Tensor attention_coefficients(const Tensor& node_feats, const std::optional<Tensor>& edge_feats,
                              const GalHeadParams& head, const Mask& neighbors,
                              double leaky_slope = kLeakySlope);

/// tanh(u) * u with u = node_feats W_h + b_h (or tanh(u) * v with a separate value transform).
Tensor gated_node_transform(const Tensor& node_feats, const GalHeadParams& head);

/// One GAL: [..., N, F_in] -> [..., N, K*F1]. When `attention` is given, receives one
/// [..., N, N] coefficient tensor per head.
Tensor gal_forward(const Tensor& node_feats, const Tensor& positions, const GalParams& params,
                   const GalOptions& options, std::vector<Tensor>* attention = nullptr);

/// Attention coefficients of every layer, each [heads, T, N, N].
struct AttentionRecord {
    std::vector<Tensor> layers;
};

struct EfgatOutput {
    Tensor h;  // [N, T, K2*F1_2]
    AttentionRecord attention;
};

/// Input embedding followed by two GALs, applied independently at every time step.
/// features: [N, T, 4]; positions: [N, T, 2].
EfgatOutput efgat_forward(const Tensor& features, const Tensor& positions, const EfgatParams& params,
                          const GalOptions& options, bool record_attention = false);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace gtcn
