#pragma once

#include <functional>
#include <string>
#include <vector>

#include "graphtcn/params.hpp"

namespace gtcn {

struct GradCheckEntry {
    std::string parameter;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double error = 0.0;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
    // One entry per checked value, in parameter order.
    std::vector<GradCheckEntry> entries;
};

/// Scalar objective of the parameters. Must be deterministic: any sampling inside
/// has to be reseeded identically on every call.
using Objective = std::function<Tensor(const ParameterStore&)>;

/// Compares reverse-mode gradients of `f` against central differences
/// (f(p + h) - f(p - h)) / 2h for every parameter value.
///
/// The error of one value is |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
/// Parameter values are perturbed in place and restored; gradients in `params`
/// are overwritten.
GradCheckResult finite_difference_check(const Objective& f, ParameterStore& params, double h = 1e-5);

}  // namespace gtcn
