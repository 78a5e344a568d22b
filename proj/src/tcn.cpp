#include "graphtcn/tcn.hpp"

#include <numeric>

#include "graphtcn/efgat.hpp"
#include "graphtcn/errors.hpp"

namespace gtcn {

std::size_t receptive_field(std::size_t layers, std::size_t kernel, std::span<const std::size_t> dilations) {
    if (layers == 0 || kernel == 0) throw ConfigError("receptive_field needs at least one layer and kernel >= 1");
    if (dilations.empty()) return (kernel - 1) * layers + 1;
    if (dilations.size() != layers) throw ConfigError("one dilation per layer expected");
    return 1 + (kernel - 1) * std::accumulate(dilations.begin(), dilations.end(), std::size_t{0});
}

TcnParams register_tcn(ParameterStore& store, const std::string& prefix, std::size_t in_channels,
                       const TcnConfig& config, std::mt19937_64& rng) {
    const std::size_t k = config.kernel;
    std::size_t c_in = in_channels;
    for (std::size_t l = 0; l < config.layers; ++l) {
        const std::string layer = prefix + ".l" + std::to_string(l);
        const Shape w{config.channels, c_in, k};
        store.add(layer + ".W_g", glorot_uniform(w, c_in * k, config.channels * k, rng));
        store.add(layer + ".b_g", Tensor::zeros({config.channels}));
        store.add(layer + ".W_f", glorot_uniform(w, c_in * k, config.channels * k, rng));
        store.add(layer + ".b_f", Tensor::zeros({config.channels}));
        c_in = config.channels;
    }
    return view_tcn(store, prefix, config.layers);
}

TcnParams view_tcn(const ParameterStore& store, const std::string& prefix, std::size_t layers) {
    TcnParams p;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string layer = prefix + ".l" + std::to_string(l);
        p.layers.push_back({store.get(layer + ".W_g"), store.get(layer + ".b_g"), store.get(layer + ".W_f"),
                            store.get(layer + ".b_f")});
    }
    return p;
}

namespace {

// x: [N, C, T]
Tensor gated_conv_nct(const Tensor& x, const TcnLayerParams& p, std::size_t dilation) {
    return mul(tanh(conv1d_causal(x, p.W_g, p.b_g, dilation)), sigmoid(conv1d_causal(x, p.W_f, p.b_f, dilation)));
}

}  // namespace

Tensor gated_conv_layer(const Tensor& h, const TcnLayerParams& params, std::size_t dilation) {
    if (h.rank() != 3) throw DimensionError("gated_conv_layer expects [N, T, C], got " + shape_str(h.shape()));
    return permute(gated_conv_nct(permute(h, {0, 2, 1}), params, dilation), {0, 2, 1});
}

Tensor tcn_forward(const Tensor& h, const TcnParams& params, const TcnConfig& config) {
    if (h.rank() != 3) throw DimensionError("tcn_forward expects [N, T, C], got " + shape_str(h.shape()));
    if (params.layers.size() != config.layers || config.dilations.size() != config.layers)
        throw ConfigError("tcn_forward: layer count mismatch");
    Tensor x = permute(h, {0, 2, 1});
    for (std::size_t l = 0; l < config.layers; ++l) x = gated_conv_nct(x, params.layers[l], config.dilations[l]);
    return permute(x, {0, 2, 1});
}

}  // namespace gtcn
