#pragma once

#include <vector>

#include "graphtcn/params.hpp"

namespace gtcn {

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over every tensor of a ParameterStore.
class Adam {
   public:
    Adam(const ParameterStore& params, AdamOptions options);

    /// Applies one update from the current gradients (missing gradients count as zero).
    void step(ParameterStore& params);

    std::size_t steps_taken() const { return t_; }
    const AdamOptions& options() const { return options_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }

   private:
    AdamOptions options_;
    std::size_t t_ = 0;
    std::vector<Shape> shapes_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace gtcn
