#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "graphtcn/gradcheck.hpp"
#include "graphtcn/params.hpp"
#include "graphtcn/tensor.hpp"

namespace gtcn::test {

inline Tensor uniform(std::mt19937_64& rng, const Shape& shape, double lo = -2.0, double hi = 2.0,
                      bool requires_grad = false) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = u(rng);
    return Tensor(shape, std::move(v), requires_grad);
}

// Multiples of 1/8 in [-4, 4]: sums and differences of these stay exact.
inline Tensor dyadic(std::mt19937_64& rng, const Shape& shape) {
    std::uniform_int_distribution<int> u(-32, 32);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = u(rng) / 8.0;
    return Tensor(shape, std::move(v));
}

// sum(w (.) y) for a fixed random w, so every output element carries a distinct weight.
inline Tensor weighted_sum(const Tensor& y, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    return sum(mul(y, uniform(rng, y.shape(), -1.0, 1.0)));
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && a.values() == b.values();
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

/// Gradient check of `op` over freshly registered input tensors.
template <typename Op>
GradCheckResult check_op(std::vector<Tensor> inputs, Op op) {
    ParameterStore store;
    for (std::size_t i = 0; i < inputs.size(); ++i) store.add("in" + std::to_string(i), inputs[i]);
    return finite_difference_check(
        [&](const ParameterStore& p) {
            std::vector<Tensor> xs;
            for (std::size_t i = 0; i < inputs.size(); ++i) xs.push_back(p.get("in" + std::to_string(i)));
            return weighted_sum(op(xs));
        },
        store);
}

}  // namespace gtcn::test
