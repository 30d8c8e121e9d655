#ifndef PASSAUTH_ADAM_HPP
#define PASSAUTH_ADAM_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace passauth::neuralnet {

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step_count = 0;
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState fresh(std::size_t parameter_count, double learning_rate = 0.05,
                           double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8);
};

// One Adam update with bias correction, in place. Refuses non-finite
// gradients (poisoned-state protection).
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads);

}  // namespace passauth::neuralnet

#endif
