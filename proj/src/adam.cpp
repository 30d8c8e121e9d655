#include "passauth/adam.hpp"

#include <cmath>
#include <string>

#include "passauth/errors.hpp"

namespace passauth::neuralnet {

AdamState AdamState::fresh(std::size_t parameter_count, double learning_rate,
                           double beta1, double beta2, double epsilon) {
    AdamState state;
    state.first_moment.assign(parameter_count, 0.0);
    state.second_moment.assign(parameter_count, 0.0);
    state.learning_rate = learning_rate;
    state.beta1 = beta1;
    state.beta2 = beta2;
    state.epsilon = epsilon;
    return state;
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw ShapeError("adam_step: parameter/gradient/state size mismatch");
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (!std::isfinite(grads[k]))
            throw NumericError("adam_step: non-finite gradient at index " +
                               std::to_string(k) + "; step refused");
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        double& m = state.first_moment[k];
        double& v = state.second_moment[k];
        m = state.beta1 * m + (1.0 - state.beta1) * grads[k];
        v = state.beta2 * v + (1.0 - state.beta2) * grads[k] * grads[k];
        const double m_hat = m / bias1;
        const double v_hat = v / bias2;
        params[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

}  // namespace passauth::neuralnet
