#pragma once

#include <cstdint>
#include <functional>

#include "gnc/foe.hpp"
#include "gnc/gmm.hpp"
#include "gnc/image.hpp"
#include "gnc/rng.hpp"

// Independent numerical oracles shared by the unit and acceptance suites.
namespace oracles {

double central_diff(const std::function<double(double)>& f, double x, double h);
double central_diff2(const std::function<double(double)>& f, double x, double h);

// |a - b| / max(|a|, |b|, floor)
double rel_err(double a, double b, double floor = 1e-7);

// The five-component 1D mixture used across the experiments.
gnc::gmm::GaussianMixture five_mode_mixture();

// Random valid mixture with n <= max_n components in dimension d.
gnc::gmm::GaussianMixture random_mixture(int d, int max_n, std::uint64_t seed,
                                         bool zero_covariances = false);

// Small random model for derivative tests: `channels` filters per layer,
// smooth random spline weights.
gnc::foe::FoEModel random_model(int depth, int channels, std::uint64_t seed, int n_x = 16,
                                int n_t = 6, double t_hat_min = -4.0, double t_hat_max = 0.0);

gnc::ImageTensor random_image(int rows, int cols, int channels, std::uint64_t seed,
                              double scale = 1.0);

// Fraction of n equally spaced starts on [lo,hi] that converge to within
// tol of target under plain preconditioned gradient descent on F(., t),
// run to convergence (the basin oracle).
double basin_fraction(const gnc::gmm::GaussianMixture& g, double t, int n, double lo, double hi,
                      double target, double tol);

}  // namespace oracles
