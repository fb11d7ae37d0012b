#pragma once

#include <cstdint>
#include <vector>

#include "gnc/check.hpp"

namespace gnc::optim {

// AdaBelief: Adam-style moments where the second accumulator tracks the
// variance of the gradient around its running mean (the "belief").
struct AdaBeliefState {
    std::vector<double> m;  // first moment
    std::vector<double> s;  // belief accumulator
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdaBeliefState(std::size_t n_params, double b1 = 0.9, double b2 = 0.999,
                            double epsilon = 1e-8)
        : m(n_params, 0.0), s(n_params, 0.0), beta1(b1), beta2(b2), eps(epsilon) {}
};

// One bias-corrected update, in place. Non-finite gradients abort the
// step before any state is touched.
void adabelief_step(AdaBeliefState& state, std::vector<double>& params,
                    const std::vector<double>& grads, double lr);

// lr_end + (lr_start - lr_end) * (1 + cos(pi * step / total)) / 2
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_start, double lr_end);

}  // namespace gnc::optim
