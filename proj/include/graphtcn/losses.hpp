#pragma once

#include <vector>

#include "graphtcn/config.hpp"
#include "graphtcn/decoders.hpp"
#include "graphtcn/tensor.hpp"

namespace gtcn {

/// Mean Euclidean distance over all pedestrians and predicted steps. pred, truth: [N, T, 2].
Tensor ade(const Tensor& pred, const Tensor& truth);
/// Mean Euclidean distance at the final step.
Tensor fde(const Tensor& pred, const Tensor& truth);

/// min_m ade(samples[m], truth); the gradient reaches only the lowest-index minimizer.
Tensor variety_loss(const std::vector<Tensor>& samples, const Tensor& truth);

/// KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum_d (mu^2 + sigma^2 - 1 - ln sigma^2).
/// For [N, F] inputs the per-row divergences are averaged.
Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& sigma);

/// lambda1 * variety + lambda2(epoch) * kl
Tensor combined_loss(const Tensor& variety, const Tensor& kl, const LossWeights& weights, int epoch);
double combined_loss(double variety, double kl, const LossWeights& weights, int epoch);

struct MinOfM {
    double ade = 0.0;
    double fde = 0.0;
};

/// Best ADE and best FDE over the samples, each minimized independently.
MinOfM evaluate_min_of_m(const PredictionSet& predictions, const Tensor& truth);

}  // namespace gtcn
