#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gnc/check.hpp"
#include "gnc/gmm.hpp"

namespace gnc::flow {

// Decreasing sequence of smoothing parameters with one step size per
// level. Constant sequences are admitted so that the no-smoothing
// baseline (t0 == t_min) runs through the same machinery.
struct Schedule {
    std::vector<double> values;      // t_0 >= t_1 >= ... > 0
    std::vector<double> step_sizes;  // eta_i > 0

    int steps() const { return static_cast<int>(values.size()); }
    void validate() const;

    static Schedule uniform_eta(std::vector<double> values, double eta);
};

// Geometrically spaced values from t0 down to t_min inclusive.
Schedule log_schedule(double t0, double t_min, int steps, double eta = 1.0);

// All levels pinned at one t.
Schedule constant_schedule(double t, int steps, double eta = 1.0);

// A family of energies (x, t) -> (F, grad_x F), smooth in x for each t.
class EnergyFamily {
public:
    virtual ~EnergyFamily() = default;
    virtual int dim() const = 0;
    virtual void value_grad(const Eigen::VectorXd& x, double t, double& value,
                            Eigen::VectorXd& grad) const = 0;
};

class GmmEnergyFamily final : public EnergyFamily {
public:
    explicit GmmEnergyFamily(gmm::GaussianMixture g) : gmm_(std::move(g)) { gmm_.validate(); }
    int dim() const override { return gmm_.dim(); }
    void value_grad(const Eigen::VectorXd& x, double t, double& value,
                    Eigen::VectorXd& grad) const override {
        gmm::SmoothedGmm(gmm_, t).value_grad(x, value, grad);
    }
    const gmm::GaussianMixture& mixture() const { return gmm_; }

private:
    gmm::GaussianMixture gmm_;
};

// One flow update x - eta * t * grad_x F(x, t); the factor t preconditions
// the step so a pure Gaussian is minimized exactly in one move.
Eigen::VectorXd gnc_flow_step(const EnergyFamily& family, const Eigen::VectorXd& x, double t,
                              double eta);

// Full trajectory: trajectory[0] = x0, one step per schedule level.
std::vector<Eigen::VectorXd> run_gnc_flow(const EnergyFamily& family, const Eigen::VectorXd& x0,
                                          const Schedule& schedule);

// Fraction of flows from n_starts equally spaced 1D starts (both interval
// endpoints included) whose endpoint lands within tol of target.
double attainment_rate(const EnergyFamily& family, int n_starts, double lo, double hi,
                       const Schedule& schedule, double target, double tol);

}  // namespace gnc::flow
