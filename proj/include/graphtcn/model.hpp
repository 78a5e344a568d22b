#pragma once

#include <optional>
#include <random>

#include "graphtcn/config.hpp"
#include "graphtcn/data.hpp"
#include "graphtcn/decoders.hpp"
#include "graphtcn/efgat.hpp"
#include "graphtcn/params.hpp"
#include "graphtcn/tcn.hpp"

namespace gtcn {

/// Spatial encoder, temporal encoder, and decoder wired per ModelConfig.
///
/// Parameters are registered in a fixed order and initialized from config.seed.
/// A model is single-writer; const members may run concurrently on different
/// threads as long as nobody mutates the parameters.
class GraphTcn {
   public:
    explicit GraphTcn(ModelConfig config);

    GraphTcn(GraphTcn&&) = default;
    GraphTcn& operator=(GraphTcn&&) = default;
    GraphTcn(const GraphTcn&) = delete;
    GraphTcn& operator=(const GraphTcn&) = delete;

    const ModelConfig& config() const { return config_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    struct Encoding {
        Tensor hvec;  // [N, T_obs, F2]
        AttentionRecord attention;
    };

    /// features: [N, T_obs, 4]; positions: [N, T_obs, 2].
    Encoding encode(const Tensor& features, const Tensor& positions, bool record_attention = false) const;
    Encoding encode(const SequenceWindow& window, bool record_attention = false) const;

    /// Future offsets of one sample from the embedding; draws noise from rng.
    /// For the latent variant this samples the N(0, I) prior.
    Tensor decode_prior(const Tensor& hvec, std::mt19937_64& rng) const;

    /// `samples` prior draws in absolute coordinates.
    PredictionSet predict(const SequenceWindow& window, std::size_t samples, std::mt19937_64& rng) const;

    struct TrainingLoss {
        Tensor total;
        Tensor variety;
        Tensor kl;  // zero for variants without a latent
    };

    /// Loss of one window with `samples` draws (posterior draws for the latent variant).
    TrainingLoss training_loss(const SequenceWindow& window, std::size_t samples, std::mt19937_64& rng,
                               int epoch) const;

    GalOptions gal_options() const;

   private:
    void check_window(const SequenceWindow& window) const;

    ModelConfig config_;
    ParameterStore params_;
    EfgatParams efgat_;
    TcnParams tcn_;
    std::optional<MlpDecoderParams> mlp_;
    std::optional<CvaeDecoderParams> cvae_;
};

}  // namespace gtcn
