#include "gnc/optim.hpp"

#include <cmath>

namespace gnc::optim {

void adabelief_step(AdaBeliefState& state, std::vector<double>& params,
                    const std::vector<double>& grads, double lr) {
    GNC_REQUIRE(params.size() == state.m.size() && grads.size() == state.m.size(),
                "optimizer state/parameter shape mismatch");
    for (double g : grads)
        GNC_CHECK_FINITE(std::isfinite(g), "non-finite gradient: aborting optimizer step");

    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        const double surprise = g - state.m[i];
        state.s[i] = state.beta2 * state.s[i] + (1.0 - state.beta2) * surprise * surprise + state.eps;
        const double mhat = state.m[i] / c1;
        const double shat = state.s[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(shat) + state.eps);
    }
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_start, double lr_end) {
    GNC_REQUIRE(total_steps > 0, "total_steps must be positive");
    GNC_REQUIRE(step <= total_steps, "step out of range");
    const double phase = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + std::cos(M_PI * phase));
}

}  // namespace gnc::optim
