#include "graphtcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "graphtcn/errors.hpp"

namespace gtcn {

namespace {

double evaluate(const Objective& f, const ParameterStore& params) {
    const double v = f(params).item();
    if (!std::isfinite(v)) throw NumericError("finite_difference_check: objective is not finite");
    return v;
}

}  // namespace

GradCheckResult finite_difference_check(const Objective& f, ParameterStore& params, double h) {
    if (!(h > 0.0)) throw ContractError("finite_difference_check: step must be positive");

    params.zero_grad();
    {
        Tape tape;
        TapeScope scope(tape);
        const Tensor root = f(params);
        if (!std::isfinite(root.item())) throw NumericError("finite_difference_check: objective is not finite");
        tape.backward(root);
    }

    GradCheckResult result;
    for (auto& [name, value] : params) {
        const std::vector<double> analytic = value.grad();
        auto data = value.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + h;
            const double up = evaluate(f, params);
            data[i] = saved - h;
            const double down = evaluate(f, params);
            data[i] = saved;

            const double numeric = (up - down) / (2.0 * h);
            const double err = std::abs(analytic[i] - numeric) /
                               std::max(1e-12, std::abs(analytic[i]) + std::abs(numeric));
            ++result.checked;
            result.entries.push_back({name, i, analytic[i], numeric, err});
            if (err > result.max_relative_error || result.checked == 1) {
                result.max_relative_error = err;
                result.worst_parameter = name;
                result.worst_index = i;
                result.analytic = analytic[i];
                result.numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace gtcn
