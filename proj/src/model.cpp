#include "graphtcn/model.hpp"

#include "graphtcn/errors.hpp"
#include "graphtcn/losses.hpp"

namespace gtcn {

GraphTcn::GraphTcn(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const GalOptions opts = gal_options();

    efgat_.embed_W = params_.add("embed.W", glorot_uniform({4, config_.embed}, 4, config_.embed, rng));
    efgat_.embed_b = params_.add("embed.b", Tensor::zeros({config_.embed}));
    if (config_.uses_efgat()) {
        efgat_.gal1 = register_gal(params_, "gal1", config_.embed, config_.gal1, opts, rng);
        efgat_.gal2 = register_gal(params_, "gal2", config_.gal1.out_width(), config_.gal2, opts, rng);
    }
    tcn_ = register_tcn(params_, "tcn", config_.spatial_width(), config_.tcn(), rng);
    if (config_.uses_cvae())
        cvae_ = register_cvae_decoder(params_, config_, rng);
    else
        mlp_ = register_mlp_decoder(params_, config_, rng);
}

GalOptions GraphTcn::gal_options() const {
    return {config_.uses_edge_features(), config_.separate_gate, config_.residual_identity, config_.leaky_slope};
}

void GraphTcn::check_window(const SequenceWindow& window) const {
    if (window.t_obs != config_.t_obs || window.t_pred != config_.t_pred)
        throw DataError("window of " + std::to_string(window.t_obs) + "+" + std::to_string(window.t_pred) +
                        " steps does not match the model's " + std::to_string(config_.t_obs) + "+" +
                        std::to_string(config_.t_pred));
}

GraphTcn::Encoding GraphTcn::encode(const Tensor& features, const Tensor& positions, bool record_attention) const {
    Encoding out;
    Tensor spatial;
    if (config_.uses_efgat()) {
        auto ef = efgat_forward(features, positions, efgat_, gal_options(), record_attention);
        spatial = ef.h;
        out.attention = std::move(ef.attention);
    } else {
        spatial = affine(features, efgat_.embed_W, efgat_.embed_b);
    }
    out.hvec = tcn_forward(spatial, tcn_, config_.tcn());
    return out;
}

GraphTcn::Encoding GraphTcn::encode(const SequenceWindow& window, bool record_attention) const {
    check_window(window);
    return encode(build_features(window), window.observed(), record_attention);
}

Tensor GraphTcn::decode_prior(const Tensor& hvec, std::mt19937_64& rng) const {
    if (mlp_) return mlp_decode(hvec, sample_shared_noise(rng, config_.t_obs, config_.f3), *mlp_, config_.t_pred);
    const std::size_t n = hvec.extent(0);
    const Tensor hflat = reshape(hvec, {n, hvec.size() / n});
    return cvae_decode(hflat, sample_prior(rng, n, config_.f4), *cvae_, config_.t_pred);
}

PredictionSet GraphTcn::predict(const SequenceWindow& window, std::size_t samples, std::mt19937_64& rng) const {
    if (samples == 0) throw ContractError("predict needs at least one sample");
    const Encoding enc = encode(window);
    const Tensor origin = window.origin();
    std::vector<Tensor> draws;
    draws.reserve(samples);
    for (std::size_t m = 0; m < samples; ++m)
        draws.push_back(repeat(relative_to_absolute(decode_prior(enc.hvec, rng), origin), 1));
    return {concat(draws, 0), origin};
}

GraphTcn::TrainingLoss GraphTcn::training_loss(const SequenceWindow& window, std::size_t samples,
                                               std::mt19937_64& rng, int epoch) const {
    if (samples == 0) throw ContractError("training_loss needs at least one sample");
    const Encoding enc = encode(window);
    const Tensor origin = window.origin();
    const Tensor truth = window.future();

    std::vector<Tensor> draws;
    draws.reserve(samples);
    Tensor kl = Tensor::scalar(0.0);
    if (mlp_) {
        for (std::size_t m = 0; m < samples; ++m) draws.push_back(relative_to_absolute(decode_prior(enc.hvec, rng), origin));
    } else {
        const std::size_t n = enc.hvec.extent(0);
        const Tensor hflat = reshape(enc.hvec, {n, enc.hvec.size() / n});
        const Tensor offsets = sub(truth, permute(repeat(origin, config_.t_pred), {1, 0, 2}));
        const Posterior post = encode_future_posterior(hflat, offsets, *cvae_);
        for (std::size_t m = 0; m < samples; ++m)
            draws.push_back(relative_to_absolute(cvae_decode(hflat, reparameterize(post, rng), *cvae_, config_.t_pred), origin));
        kl = kl_diag_gaussian(post.mu, post.sigma);
    }
    const Tensor variety = variety_loss(draws, truth);
    Tensor total = mlp_ ? scale(variety, config_.loss.lambda1) : combined_loss(variety, kl, config_.loss, epoch);
    return {total, variety, kl};
}

}  // namespace gtcn
