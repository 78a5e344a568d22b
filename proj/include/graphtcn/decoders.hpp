#pragma once

// Maps spatio-temporal embeddings plus noise to future offsets from each
// pedestrian's last observed position.

#include <random>
#include <string>

#include "graphtcn/config.hpp"
#include "graphtcn/params.hpp"
#include "graphtcn/tensor.hpp"

namespace gtcn {

struct MlpDecoderParams {
    Tensor W;  // [T_obs * (F2 + F3), T_pred * 2]
    Tensor b;
};

struct CvaeDecoderParams {
    Tensor future_W;     // [T_pred * 2, F4]
    Tensor future_b;
    Tensor posterior_W;  // [T_obs * F2 + F4, 2 * F4] -> (mu, log variance)
    Tensor posterior_b;
    Tensor out_W;        // [T_obs * F2 + F4, T_pred * 2]
    Tensor out_b;
};

MlpDecoderParams register_mlp_decoder(ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng);
MlpDecoderParams view_mlp_decoder(const ParameterStore& store);
CvaeDecoderParams register_cvae_decoder(ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng);
CvaeDecoderParams view_cvae_decoder(const ParameterStore& store);

/// M candidate futures in absolute coordinates.
struct PredictionSet {
    Tensor trajectories;  // [M, N, T_pred, 2]
    Tensor origin;        // [N, 2]

    std::size_t sample_count() const { return trajectories.extent(0); }
    /// Sample m as [N, T_pred, 2].
    Tensor sample(std::size_t m) const;
};

/// i.i.d. standard normal [T_obs, F3]; one draw is shared by every pedestrian.
Tensor sample_shared_noise(std::mt19937_64& rng, std::size_t t_obs, std::size_t f3);

/// concat(h_i, z) per step, flattened, one affine layer: [N, T_obs, F2] -> [N, T_pred, 2].
Tensor mlp_decode(const Tensor& hvec, const Tensor& z, const MlpDecoderParams& params, std::size_t t_pred);

struct Posterior {
    Tensor mu;     // [N, F4]
    Tensor sigma;  // [N, F4], exp(logvar / 2)
};

/// hflat: [N, T_obs * F2]; future_offsets: [N, T_pred, 2].
Posterior encode_future_posterior(const Tensor& hflat, const Tensor& future_offsets, const CvaeDecoderParams& params);

/// mu + sigma (.) eps with eps ~ N(0, I); differentiable in mu and sigma.
Tensor reparameterize(const Posterior& posterior, std::mt19937_64& rng);
/// Latent draw at inference: N(0, I) of shape [N, F4].
Tensor sample_prior(std::mt19937_64& rng, std::size_t n, std::size_t f4);

/// One affine layer on concat(hflat, zhat): -> [N, T_pred, 2].
Tensor cvae_decode(const Tensor& hflat, const Tensor& zhat, const CvaeDecoderParams& params, std::size_t t_pred);

/// Yhat[i, t] = origin[i] + offsets[i, t].
Tensor relative_to_absolute(const Tensor& offsets, const Tensor& origin);

/// Standard normal tensor of the given shape.
Tensor standard_normal(std::mt19937_64& rng, const Shape& shape);

}  // namespace gtcn
