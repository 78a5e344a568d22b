#include "graphtcn/losses.hpp"

#include <algorithm>

#include "graphtcn/errors.hpp"

namespace gtcn {

namespace {

void check_pair(const char* op, const Tensor& pred, const Tensor& truth) {
    if (pred.shape() != truth.shape() || pred.rank() != 3 || pred.extent(2) != 2)
        throw DimensionError(std::string(op) + ": prediction " + shape_str(pred.shape()) + " vs ground truth " +
                             shape_str(truth.shape()));
}

}  // namespace

Tensor ade(const Tensor& pred, const Tensor& truth) {
    check_pair("ade", pred, truth);
    return mean(norm_last(sub(pred, truth)));
}

Tensor fde(const Tensor& pred, const Tensor& truth) {
    check_pair("fde", pred, truth);
    const std::size_t t = pred.extent(1);
    return mean(norm_last(sub(slice(pred, 1, t - 1, t), slice(truth, 1, t - 1, t))));
}

Tensor variety_loss(const std::vector<Tensor>& samples, const Tensor& truth) {
    if (samples.empty()) throw ContractError("variety_loss needs at least one sample");
    std::vector<Tensor> per_sample;
    per_sample.reserve(samples.size());
    for (const auto& s : samples) per_sample.push_back(ade(s, truth));
    return min(concat(per_sample, 0));
}

Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& sigma) {
    if (mu.shape() != sigma.shape()) throw DimensionError("kl_diag_gaussian: mu and sigma shapes differ");
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (!(sigma.data()[i] > 0.0))
            throw DomainError("kl_diag_gaussian: non-positive sigma at index " + std::to_string(i));
    const Tensor var = mul(sigma, sigma);
    const Tensor terms = sub(sub(add(mul(mu, mu), var), Tensor::scalar(1.0)), log(var));
    const Tensor per_row = scale(sum(terms, mu.rank() - 1), 0.5);
    return mean(per_row);
}

Tensor combined_loss(const Tensor& variety, const Tensor& kl, const LossWeights& weights, int epoch) {
    if (epoch < 1) throw ContractError("combined_loss: epochs are numbered from 1");
    return add(scale(variety, weights.lambda1), scale(kl, weights.lambda2(epoch)));
}

double combined_loss(double variety, double kl, const LossWeights& weights, int epoch) {
    if (epoch < 1) throw ContractError("combined_loss: epochs are numbered from 1");
    return weights.lambda1 * variety + weights.lambda2(epoch) * kl;
}

MinOfM evaluate_min_of_m(const PredictionSet& predictions, const Tensor& truth) {
    const std::size_t m = predictions.sample_count();
    if (m == 0) throw ContractError("evaluate_min_of_m: empty prediction set");
    MinOfM best{0.0, 0.0};
    for (std::size_t k = 0; k < m; ++k) {
        const Tensor s = predictions.sample(k);
        const double a = ade(s, truth).item();
        const double f = fde(s, truth).item();
        best.ade = k == 0 ? a : std::min(best.ade, a);
        best.fde = k == 0 ? f : std::min(best.fde, f);
    }
    return best;
}

}  // namespace gtcn
