#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gnc/flow.hpp"
#include "support/oracles.hpp"

using gnc::flow::EnergyFamily;
using gnc::flow::GmmEnergyFamily;
using gnc::flow::log_schedule;
using gnc::flow::Schedule;
using gnc::gmm::GaussianMixture;
using oracles::five_mode_mixture;

namespace {
Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }
}  // namespace

TEST_CASE("log schedule hits decade values exactly") {
    const Schedule s = log_schedule(1.0, 1e-4, 5);
    REQUIRE(s.steps() == 5);
    const double want[] = {1.0, 1e-1, 1e-2, 1e-3, 1e-4};
    for (int i = 0; i < 5; ++i) CHECK(s.values[i] == doctest::Approx(want[i]).epsilon(1e-12));
    CHECK(s.values.front() == 1.0);
    CHECK(s.values.back() == 1e-4);
}

TEST_CASE("log schedule rejects t0 <= t_min") {
    CHECK_THROWS_AS(log_schedule(1.0, 1.0, 1), gnc::InvalidInput);
    CHECK_THROWS_AS(log_schedule(0.5, 1.0, 3), gnc::InvalidInput);
    CHECK_THROWS_AS(log_schedule(1.0, 0.5, 0), gnc::InvalidInput);
}

TEST_CASE("log schedule interpolates geometrically") {
    const Schedule s = log_schedule(0.25, 0.01, 3);
    REQUIRE(s.steps() == 3);
    CHECK(s.values[0] == 0.25);
    CHECK(s.values[1] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(s.values[2] == 0.01);
}

TEST_CASE("schedule validation") {
    CHECK_NOTHROW(gnc::flow::constant_schedule(0.5, 4).validate());
    Schedule bad = Schedule::uniform_eta({0.5, 0.5, 0.5}, 1.0);
    bad.values[2] = 0.6;  // increasing
    CHECK_THROWS_AS(bad.validate(), gnc::InvalidInput);
    bad.values = {0.5, 0.2, 0.0};
    CHECK_THROWS_AS(bad.validate(), gnc::InvalidInput);
    bad.values = {0.5, 0.2, 0.1};
    bad.step_sizes = {1.0, 1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), gnc::InvalidInput);
}

TEST_CASE("one flow step minimizes a pure Gaussian exactly") {
    const GmmEnergyFamily fam(GaussianMixture::isotropic1d({1.0}, {0.0}, {0.0}));
    const Eigen::VectorXd out = gnc::flow::gnc_flow_step(fam, vec1(1.7), 4.0, 1.0);
    CHECK(out(0) == 0.0);
}

TEST_CASE("a zero step size leaves the point unchanged") {
    const GmmEnergyFamily fam(five_mode_mixture());
    const Eigen::VectorXd out = gnc::flow::gnc_flow_step(fam, vec1(-3.0), 1.0, 0.0);
    CHECK(out(0) == -3.0);
}

TEST_CASE("flow step equals an independently computed preconditioned gradient step") {
    const GmmEnergyFamily fam(five_mode_mixture());
    const auto e = gnc::gmm::smoothed_energy(five_mode_mixture(), vec1(-3.0), 1.0);
    const Eigen::VectorXd out = gnc::flow::gnc_flow_step(fam, vec1(-3.0), 1.0, 1.0);
    CHECK(out(0) == doctest::Approx(-3.0 - 1.0 * e.gradient(0)).epsilon(1e-13));
}

TEST_CASE("single-level trajectory reproduces one step") {
    const GmmEnergyFamily fam(five_mode_mixture());
    const Schedule s = Schedule::uniform_eta({0.3}, 1.0);
    const auto traj = gnc::flow::run_gnc_flow(fam, vec1(0.8), s);
    REQUIRE(traj.size() == 2);
    CHECK(traj[0](0) == 0.8);
    CHECK(traj[1](0) == gnc::flow::gnc_flow_step(fam, vec1(0.8), 0.3, 1.0)(0));
}

TEST_CASE("single-Gaussian trajectories contract monotonically") {
    const GmmEnergyFamily fam(GaussianMixture::isotropic1d({1.0}, {0.4}, {0.02}));
    const Schedule s = log_schedule(1.0, 1e-3, 40);
    const auto traj = gnc::flow::run_gnc_flow(fam, vec1(-2.5), s);
    for (std::size_t i = 1; i < traj.size(); ++i)
        CHECK(std::abs(traj[i](0) - 0.4) <= std::abs(traj[i - 1](0) - 0.4) + 1e-15);
}

TEST_CASE("five-mode flow from the global basin lands at the center well") {
    const GmmEnergyFamily fam(five_mode_mixture());
    const Schedule s = log_schedule(1.0, 1e-4, 100);
    const auto traj = gnc::flow::run_gnc_flow(fam, vec1(0.9), s);
    CHECK(std::abs(traj.back()(0) - 0.5) < 0.05);
}

TEST_CASE("endpoint gradient shrinks with more steps on a convex family") {
    const GmmEnergyFamily fam(GaussianMixture::isotropic1d({1.0}, {0.0}, {0.05}));
    double prev = 1e300;
    for (int steps : {5, 20, 80}) {
        const auto traj = gnc::flow::run_gnc_flow(fam, vec1(2.0), log_schedule(1.0, 1e-4, steps));
        double value;
        Eigen::VectorXd grad;
        fam.value_grad(traj.back(), 1e-4, value, grad);
        CHECK(grad.norm() < prev);
        prev = grad.norm();
    }
}

TEST_CASE("attainment rate is 1 for a convex family") {
    const GmmEnergyFamily fam(GaussianMixture::isotropic1d({1.0}, {0.25}, {0.01}));
    const double rate = gnc::flow::attainment_rate(fam, 200, -3.0, 3.0,
                                                   log_schedule(1.0, 1e-4, 120), 0.25, 0.1);
    CHECK(rate == 1.0);
}

TEST_CASE("attainment rate is reproducible bit for bit") {
    const GmmEnergyFamily fam(five_mode_mixture());
    const Schedule s = log_schedule(1e-1, 1e-4, 25);
    const double a = gnc::flow::attainment_rate(fam, 257, -3.0, 3.0, s, 0.5, 0.1);
    const double b = gnc::flow::attainment_rate(fam, 257, -3.0, 3.0, s, 0.5, 0.1);
    CHECK(a == b);
}

TEST_CASE("attainment rate is non-decreasing in the initial smoothing") {
    const GmmEnergyFamily fam(five_mode_mixture());
    const double t_min = 1e-4;
    double prev = -1.0;
    for (double t0 : {1e-4, 1e-2, 1e-1, 1.0}) {
        const Schedule s = t0 > t_min ? log_schedule(t0, t_min, 100, 1.0)
                                      : gnc::flow::constant_schedule(t0, 100, 1.0);
        const double rate = gnc::flow::attainment_rate(fam, 300, -3.0, 3.0, s, 0.5, 0.1);
        CHECK(rate >= prev);
        prev = rate;
    }
    CHECK(prev == 1.0);  // largest smoothing attains everywhere
}

namespace {
class BrokenFamily final : public EnergyFamily {
public:
    int dim() const override { return 1; }
    void value_grad(const Eigen::VectorXd&, double, double& value, Eigen::VectorXd& grad) const override {
        value = 0.0;
        grad = Eigen::VectorXd::Constant(1, std::nan(""));
    }
};
}  // namespace

TEST_CASE("non-finite gradients are flagged") {
    const BrokenFamily fam;
    CHECK_THROWS_AS(gnc::flow::gnc_flow_step(fam, vec1(0.0), 1.0, 1.0), gnc::ComputeError);
}

TEST_CASE("attainment precondition checks") {
    const GmmEnergyFamily fam(five_mode_mixture());
    const Schedule s = log_schedule(1.0, 1e-2, 5);
    CHECK_THROWS_AS(gnc::flow::attainment_rate(fam, 1, -3, 3, s, 0.5, 0.1), gnc::InvalidInput);
    CHECK_THROWS_AS(gnc::flow::attainment_rate(fam, 100, 3, 3, s, 0.5, 0.1), gnc::InvalidInput);
    CHECK_THROWS_AS(gnc::flow::attainment_rate(fam, 100, -3, 3, s, 0.5, 0.0), gnc::InvalidInput);
}
