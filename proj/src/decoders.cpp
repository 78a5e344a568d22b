#include "graphtcn/decoders.hpp"

#include "graphtcn/efgat.hpp"
#include "graphtcn/errors.hpp"

namespace gtcn {

MlpDecoderParams register_mlp_decoder(ParameterStore& store, const ModelConfig& c, std::mt19937_64& rng) {
    const std::size_t in = c.t_obs * (c.f2 + c.f3);
    const std::size_t out = c.t_pred * 2;
    store.add("dec.W", glorot_uniform({in, out}, in, out, rng));
    store.add("dec.b", Tensor::zeros({out}));
    return view_mlp_decoder(store);
}

MlpDecoderParams view_mlp_decoder(const ParameterStore& store) {
    return {store.get("dec.W"), store.get("dec.b")};
}

CvaeDecoderParams register_cvae_decoder(ParameterStore& store, const ModelConfig& c, std::mt19937_64& rng) {
    const std::size_t fut = c.t_pred * 2;
    const std::size_t ctx = c.t_obs * c.f2 + c.f4;
    store.add("cvae.future.W", glorot_uniform({fut, c.f4}, fut, c.f4, rng));
    store.add("cvae.future.b", Tensor::zeros({c.f4}));
    store.add("cvae.posterior.W", glorot_uniform({ctx, 2 * c.f4}, ctx, 2 * c.f4, rng));
    store.add("cvae.posterior.b", Tensor::zeros({2 * c.f4}));
    store.add("cvae.out.W", glorot_uniform({ctx, fut}, ctx, fut, rng));
    store.add("cvae.out.b", Tensor::zeros({fut}));
    return view_cvae_decoder(store);
}

CvaeDecoderParams view_cvae_decoder(const ParameterStore& store) {
    return {store.get("cvae.future.W"),    store.get("cvae.future.b"), store.get("cvae.posterior.W"),
            store.get("cvae.posterior.b"), store.get("cvae.out.W"),    store.get("cvae.out.b")};
}

Tensor PredictionSet::sample(std::size_t m) const {
    const Shape& s = trajectories.shape();
    return reshape(slice(trajectories, 0, m, m + 1), {s[1], s[2], s[3]});
}

Tensor standard_normal(std::mt19937_64& rng, const Shape& shape) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = dist(rng);
    return Tensor(shape, std::move(v));
}

Tensor sample_shared_noise(std::mt19937_64& rng, std::size_t t_obs, std::size_t f3) {
    return standard_normal(rng, {t_obs, f3});
}

Tensor mlp_decode(const Tensor& hvec, const Tensor& z, const MlpDecoderParams& params, std::size_t t_pred) {
    if (hvec.rank() != 3 || z.rank() != 2 || z.extent(0) != hvec.extent(1))
        throw DimensionError("mlp_decode: embedding " + shape_str(hvec.shape()) + " vs noise " + shape_str(z.shape()));
    const std::size_t n = hvec.extent(0);
    const std::size_t t_obs = hvec.extent(1);
    const Tensor joined = concat({hvec, repeat(z, n)}, 2);
    const Tensor flat = reshape(joined, {n, t_obs * joined.extent(2)});
    return reshape(affine(flat, params.W, params.b), {n, t_pred, 2});
}

Posterior encode_future_posterior(const Tensor& hflat, const Tensor& future_offsets, const CvaeDecoderParams& params) {
    const std::size_t n = hflat.extent(0);
    if (future_offsets.rank() != 3 || future_offsets.extent(0) != n)
        throw DimensionError("encode_future_posterior: " + shape_str(hflat.shape()) + " vs " +
                             shape_str(future_offsets.shape()));
    const Tensor fut = reshape(future_offsets, {n, future_offsets.size() / n});
    const Tensor encoded = affine(fut, params.future_W, params.future_b);
    const Tensor stats = affine(concat({hflat, encoded}, 1), params.posterior_W, params.posterior_b);
    const std::size_t f4 = stats.extent(1) / 2;
    return {slice(stats, 1, 0, f4), exp(scale(slice(stats, 1, f4, 2 * f4), 0.5))};
}

Tensor reparameterize(const Posterior& posterior, std::mt19937_64& rng) {
    const Tensor eps = standard_normal(rng, posterior.mu.shape());
    return add(posterior.mu, mul(posterior.sigma, eps));
}

Tensor sample_prior(std::mt19937_64& rng, std::size_t n, std::size_t f4) { return standard_normal(rng, {n, f4}); }

Tensor cvae_decode(const Tensor& hflat, const Tensor& zhat, const CvaeDecoderParams& params, std::size_t t_pred) {
    if (hflat.rank() != 2 || zhat.rank() != 2 || zhat.extent(0) != hflat.extent(0))
        throw DimensionError("cvae_decode: " + shape_str(hflat.shape()) + " vs " + shape_str(zhat.shape()));
    const std::size_t n = hflat.extent(0);
    return reshape(affine(concat({hflat, zhat}, 1), params.out_W, params.out_b), {n, t_pred, 2});
}

Tensor relative_to_absolute(const Tensor& offsets, const Tensor& origin) {
    if (offsets.rank() != 3 || origin.rank() != 2 || origin.extent(0) != offsets.extent(0) || origin.extent(1) != 2 ||
        offsets.extent(2) != 2)
        throw DimensionError("relative_to_absolute: " + shape_str(offsets.shape()) + " vs origin " +
                             shape_str(origin.shape()));
    const Tensor anchored = permute(repeat(origin, offsets.extent(1)), {1, 0, 2});
    return add(anchored, offsets);
}

}  // namespace gtcn
