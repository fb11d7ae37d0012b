#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gnc/check.hpp"

namespace gnc::gmm {

// Mixture of Gaussians in R^d. Covariances are positive SEMI-definite;
// all-zero covariances encode an empirical (Dirac) measure, which the
// smoothed energy handles because t*Id makes every component proper.
struct GaussianMixture {
    Eigen::VectorXd weights;               // on the unit simplex
    std::vector<Eigen::VectorXd> means;    // n points in R^d
    std::vector<Eigen::MatrixXd> covariances;

    int size() const { return static_cast<int>(weights.size()); }
    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

    void validate() const;

    static GaussianMixture isotropic1d(const std::vector<double>& w, const std::vector<double>& mu,
                                       const std::vector<double>& var);
    static GaussianMixture from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct EnergyEval {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

// Mixture with every covariance inflated by t*Id and factorized once;
// evaluating many points at one smoothing level reuses the Cholesky
// factors. Pure and safe to share across threads.
class SmoothedGmm {
public:
    SmoothedGmm(const GaussianMixture& gmm, double t);

    double value(const Eigen::VectorXd& x) const;
    void value_grad(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad) const;
    EnergyEval evaluate(const Eigen::VectorXd& x) const;

    double t() const { return t_; }
    int dim() const { return dim_; }

private:
    struct Component {
        double log_weight;
        Eigen::VectorXd mean;
        Eigen::LLT<Eigen::MatrixXd> chol;  // of covariance + t*Id
        double log_norm;                   // log of the Gaussian normalizer
    };
    // log w_i + log G(mean_i, cov_i + t Id)(x) per component, plus r_i = Sigma~^-1 (x - mean_i)
    void component_terms(const Eigen::VectorXd& x, std::vector<double>& log_terms) const;

    double t_;
    int dim_;
    std::vector<Component> comps_;
};

// F(x,t) = -log((p * G(0, t Id))(x)) with exact analytic gradient and
// Hessian; log-sum-exp stabilized.
EnergyEval smoothed_energy(const GaussianMixture& gmm, const Eigen::VectorXd& x, double t);

struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

// Smoothing level that provably makes F(.,t) convex on the box:
// max over box corners of max_i ||x - x_i||^2 (the max of a convex
// function over a box sits at a corner).
double convexity_threshold_bound(const GaussianMixture& gmm, const Box& domain);

struct NumericConvexityResult {
    std::optional<double> threshold;                 // empty: none convex in range
    std::vector<std::pair<double, double>> curve;    // (t, min Hessian eigenvalue over grid)
};

// Smallest candidate t whose minimum Hessian eigenvalue over the grid
// stays above -1e-9; candidates must be sorted in decreasing order.
NumericConvexityResult numeric_convexity_threshold(const GaussianMixture& gmm,
                                                   const std::vector<Eigen::VectorXd>& grid,
                                                   const std::vector<double>& t_candidates);

struct ConvexityReport {
    double bound_t = 0.0;
    double numeric_t = 0.0;
    std::string grid_spec;
};

// 1D helpers for the smoothed density p(., t): CDF and quantile.
double smoothed_cdf_1d(const GaussianMixture& gmm, double x, double t);
double smoothed_quantile_1d(const GaussianMixture& gmm, double q, double t);

}  // namespace gnc::gmm
