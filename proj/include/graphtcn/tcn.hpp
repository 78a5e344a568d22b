#pragma once

// Gated causal temporal convolution stack, applied to every pedestrian independently.

#include <random>
#include <span>
#include <string>
#include <vector>

#include "graphtcn/config.hpp"
#include "graphtcn/params.hpp"
#include "graphtcn/tensor.hpp"

namespace gtcn {

struct TcnLayerParams {
    Tensor W_g;  // [F2, C_in, k]  tanh branch
    Tensor b_g;
    Tensor W_f;  // [F2, C_in, k]  sigmoid gate
    Tensor b_f;
};

struct TcnParams {
    std::vector<TcnLayerParams> layers;
};

/// Steps of history visible to one output of the stack: 1 + (k - 1) * sum(dilations).
/// With no dilations given, every one of the `layers` layers has dilation 1.
std::size_t receptive_field(std::size_t layers, std::size_t kernel, std::span<const std::size_t> dilations = {});

TcnParams register_tcn(ParameterStore& store, const std::string& prefix, std::size_t in_channels,
                       const TcnConfig& config, std::mt19937_64& rng);
TcnParams view_tcn(const ParameterStore& store, const std::string& prefix, std::size_t layers);

/// tanh(W_g * h) (.) sigmoid(W_f * h) with causal convolutions along time.
/// h: [N, T, C_in] -> [N, T, F2]
Tensor gated_conv_layer(const Tensor& h, const TcnLayerParams& params, std::size_t dilation = 1);

/// h: [N, T, C_in] -> [N, T, F2]
Tensor tcn_forward(const Tensor& h, const TcnParams& params, const TcnConfig& config);

}  // namespace gtcn
