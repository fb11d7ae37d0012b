#include "gnc/flow.hpp"

#include <cmath>

namespace gnc::flow {

void Schedule::validate() const {
    GNC_REQUIRE(!values.empty(), "schedule must have at least one level");
    GNC_REQUIRE(values.size() == step_sizes.size(), "schedule: one step size per level");
    for (std::size_t i = 0; i < values.size(); ++i) {
        GNC_REQUIRE(values[i] > 0.0, "schedule values must be positive");
        GNC_REQUIRE(step_sizes[i] > 0.0, "schedule step sizes must be positive");
        if (i > 0) GNC_REQUIRE(values[i] <= values[i - 1], "schedule values must be non-increasing");
    }
}

Schedule Schedule::uniform_eta(std::vector<double> values, double eta) {
    Schedule s;
    s.step_sizes.assign(values.size(), eta);
    s.values = std::move(values);
    s.validate();
    return s;
}

Schedule log_schedule(double t0, double t_min, int steps, double eta) {
    GNC_REQUIRE(t_min > 0.0, "t_min must be positive");
    GNC_REQUIRE(t0 > t_min, "t0 must exceed t_min");
    GNC_REQUIRE(steps >= 1, "need at least one step");
    std::vector<double> vals(steps);
    if (steps == 1) {
        vals[0] = t0;
    } else {
        const double l0 = std::log10(t0), l1 = std::log10(t_min);
        for (int i = 0; i < steps; ++i)
            vals[i] = std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) / (steps - 1));
        vals.front() = t0;
        vals.back() = t_min;
    }
    return Schedule::uniform_eta(std::move(vals), eta);
}

Schedule constant_schedule(double t, int steps, double eta) {
    GNC_REQUIRE(t > 0.0, "t must be positive");
    GNC_REQUIRE(steps >= 1, "need at least one step");
    return Schedule::uniform_eta(std::vector<double>(steps, t), eta);
}

Eigen::VectorXd gnc_flow_step(const EnergyFamily& family, const Eigen::VectorXd& x, double t,
                              double eta) {
    GNC_REQUIRE(t > 0.0, "t must be positive");
    GNC_REQUIRE(eta >= 0.0, "eta must be nonnegative");
    double value;
    Eigen::VectorXd grad;
    family.value_grad(x, t, value, grad);
    GNC_CHECK_FINITE(grad.allFinite(), "flow step hit a non-finite gradient");
    return x - eta * t * grad;
}

std::vector<Eigen::VectorXd> run_gnc_flow(const EnergyFamily& family, const Eigen::VectorXd& x0,
                                          const Schedule& schedule) {
    schedule.validate();
    std::vector<Eigen::VectorXd> traj;
    traj.reserve(schedule.steps() + 1);
    traj.push_back(x0);
    for (int i = 0; i < schedule.steps(); ++i)
        traj.push_back(gnc_flow_step(family, traj.back(), schedule.values[i], schedule.step_sizes[i]));
    return traj;
}

double attainment_rate(const EnergyFamily& family, int n_starts, double lo, double hi,
                       const Schedule& schedule, double target, double tol) {
    GNC_REQUIRE(n_starts >= 2, "need at least two starts");
    GNC_REQUIRE(tol > 0.0, "tolerance must be positive");
    GNC_REQUIRE(hi > lo, "degenerate start interval");
    GNC_REQUIRE(family.dim() == 1, "attainment experiment is 1D");
    schedule.validate();

    long long hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
    for (int s = 0; s < n_starts; ++s) {
        Eigen::VectorXd x(1);
        x(0) = lo + (hi - lo) * static_cast<double>(s) / (n_starts - 1);
        double value;
        Eigen::VectorXd grad;
        for (int i = 0; i < schedule.steps(); ++i) {
            family.value_grad(x, schedule.values[i], value, grad);
            x -= schedule.step_sizes[i] * schedule.values[i] * grad;
        }
        if (std::abs(x(0) - target) <= tol) ++hits;
    }
    return static_cast<double>(hits) / n_starts;
}

}  // namespace gnc::flow
