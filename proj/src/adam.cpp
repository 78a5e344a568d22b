#include "graphtcn/adam.hpp"

#include <cmath>

#include "graphtcn/errors.hpp"

namespace gtcn {

Adam::Adam(const ParameterStore& params, AdamOptions options) : options_(options) {
    for (const auto& e : params) {
        shapes_.push_back(e.value.shape());
        m_.emplace_back(e.value.size(), 0.0);
        v_.emplace_back(e.value.size(), 0.0);
    }
}

void Adam::step(ParameterStore& params) {
    if (params.size() != m_.size()) throw ContractError("Adam: parameter count changed since construction");
    std::size_t j = 0;
    for (const auto& e : params)
        if (e.value.shape() != shapes_[j++]) throw ContractError("Adam: shape of " + e.name + " changed");
    ++t_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));

    std::size_t k = 0;
    for (auto& e : params) {
        auto& m = m_[k];
        auto& v = v_[k];
        auto p = e.value.data();
        const std::vector<double> g = e.value.grad();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
        }
        ++k;
    }
}

}  // namespace gtcn
