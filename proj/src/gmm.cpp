#include "gnc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

namespace gnc::gmm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void GaussianMixture::validate() const {
    const int n = size();
    GNC_REQUIRE(n >= 1, "mixture needs at least one component");
    GNC_REQUIRE(static_cast<int>(means.size()) == n && static_cast<int>(covariances.size()) == n,
                "mixture: weights, means and covariances must have equal length");
    const int d = dim();
    GNC_REQUIRE(d >= 1, "mixture dimension must be positive");
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        GNC_REQUIRE(weights(i) >= 0.0, "mixture weights must be nonnegative");
        wsum += weights(i);
        GNC_REQUIRE(means[i].size() == d, "mixture means must share one dimension");
        GNC_REQUIRE(covariances[i].rows() == d && covariances[i].cols() == d,
                    "mixture covariances must be d x d");
        GNC_REQUIRE((covariances[i] - covariances[i].transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                    "mixture covariances must be symmetric");
        if (d == 1) {
            GNC_REQUIRE(covariances[i](0, 0) >= -1e-12, "covariance must be positive semi-definite");
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariances[i], Eigen::EigenvaluesOnly);
            GNC_REQUIRE(es.eigenvalues().minCoeff() >= -1e-12,
                        "covariance must be positive semi-definite");
        }
    }
    GNC_REQUIRE(std::abs(wsum - 1.0) <= 1e-12, "mixture weights must sum to 1");
}

GaussianMixture GaussianMixture::isotropic1d(const std::vector<double>& w, const std::vector<double>& mu,
                                             const std::vector<double>& var) {
    GaussianMixture g;
    const int n = static_cast<int>(w.size());
    g.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
    for (int i = 0; i < n; ++i) {
        g.means.push_back(Eigen::VectorXd::Constant(1, mu[i]));
        g.covariances.push_back(Eigen::MatrixXd::Constant(1, 1, var[i]));
    }
    g.validate();
    return g;
}

GaussianMixture GaussianMixture::from_json(const nlohmann::json& j) {
    GaussianMixture g;
    const auto& w = j.at("weights");
    const auto& m = j.at("means");
    const auto& c = j.at("covariances");
    const int n = static_cast<int>(w.size());
    GNC_REQUIRE(n >= 1, "mixture JSON: empty weights");
    const int d = static_cast<int>(m.at(0).size());
    g.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        g.weights(i) = w.at(i).get<double>();
        Eigen::VectorXd mu(d);
        for (int k = 0; k < d; ++k) mu(k) = m.at(i).at(k).get<double>();
        g.means.push_back(mu);
        Eigen::MatrixXd cov(d, d);
        for (int r = 0; r < d; ++r)
            for (int s = 0; s < d; ++s) cov(r, s) = c.at(i).at(r).at(s).get<double>();
        g.covariances.push_back(cov);
    }
    g.validate();
    return g;
}

nlohmann::json GaussianMixture::to_json() const {
    nlohmann::json j;
    const int n = size(), d = dim();
    for (int i = 0; i < n; ++i) {
        j["weights"].push_back(weights(i));
        nlohmann::json mu = nlohmann::json::array();
        for (int k = 0; k < d; ++k) mu.push_back(means[i](k));
        j["means"].push_back(mu);
        nlohmann::json cov = nlohmann::json::array();
        for (int r = 0; r < d; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int s = 0; s < d; ++s) row.push_back(covariances[i](r, s));
            cov.push_back(row);
        }
        j["covariances"].push_back(cov);
    }
    return j;
}

SmoothedGmm::SmoothedGmm(const GaussianMixture& gmm, double t) : t_(t), dim_(gmm.dim()) {
    GNC_REQUIRE(t > 0.0, "smoothing parameter t must be positive");
    gmm.validate();
    const Eigen::MatrixXd tid = t * Eigen::MatrixXd::Identity(dim_, dim_);
    for (int i = 0; i < gmm.size(); ++i) {
        if (gmm.weights(i) == 0.0) continue;
        Component c;
        c.log_weight = std::log(gmm.weights(i));
        c.mean = gmm.means[i];
        c.chol.compute(gmm.covariances[i] + tid);
        GNC_CHECK_FINITE(c.chol.info() == Eigen::Success,
                         "covariance + t*Id must be positive definite");
        double log_det = 0.0;
        for (int k = 0; k < dim_; ++k) log_det += std::log(c.chol.matrixL()(k, k));
        c.log_norm = -0.5 * dim_ * kLog2Pi - log_det;
        comps_.push_back(std::move(c));
    }
}

void SmoothedGmm::component_terms(const Eigen::VectorXd& x, std::vector<double>& log_terms) const {
    log_terms.resize(comps_.size());
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        const Component& c = comps_[i];
        const Eigen::VectorXd diff = x - c.mean;
        const Eigen::VectorXd half = c.chol.matrixL().solve(diff);
        log_terms[i] = c.log_weight + c.log_norm - 0.5 * half.squaredNorm();
    }
}

double SmoothedGmm::value(const Eigen::VectorXd& x) const {
    GNC_REQUIRE(x.size() == dim_, "point dimension mismatch");
    std::vector<double> lt;
    component_terms(x, lt);
    const double m = *std::max_element(lt.begin(), lt.end());
    double s = 0.0;
    for (double v : lt) s += std::exp(v - m);
    return -(m + std::log(s));
}

void SmoothedGmm::value_grad(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad) const {
    GNC_REQUIRE(x.size() == dim_, "point dimension mismatch");
    std::vector<double> lt;
    component_terms(x, lt);
    const double m = *std::max_element(lt.begin(), lt.end());
    double s = 0.0;
    for (double v : lt) s += std::exp(v - m);
    value = -(m + std::log(s));
    grad = Eigen::VectorXd::Zero(dim_);
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        const double p = std::exp(lt[i] - m) / s;  // softmax responsibility
        if (p == 0.0) continue;
        grad += p * comps_[i].chol.solve(x - comps_[i].mean);
    }
}

EnergyEval SmoothedGmm::evaluate(const Eigen::VectorXd& x) const {
    GNC_REQUIRE(x.size() == dim_, "point dimension mismatch");
    std::vector<double> lt;
    component_terms(x, lt);
    const double m = *std::max_element(lt.begin(), lt.end());
    double s = 0.0;
    for (double v : lt) s += std::exp(v - m);

    EnergyEval out;
    out.value = -(m + std::log(s));
    out.gradient = Eigen::VectorXd::Zero(dim_);
    out.hessian = Eigen::MatrixXd::Zero(dim_, dim_);
    // grad F = sum_i p_i r_i,  hess F = sum_i p_i (Sigma~_i^-1 - r_i r_i^T) + grad grad^T
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        const double p = std::exp(lt[i] - m) / s;
        if (p == 0.0) continue;
        const Eigen::VectorXd r = comps_[i].chol.solve(x - comps_[i].mean);
        out.gradient += p * r;
        const Eigen::MatrixXd inv = comps_[i].chol.solve(Eigen::MatrixXd::Identity(dim_, dim_));
        out.hessian += p * (inv - r * r.transpose());
    }
    out.hessian += out.gradient * out.gradient.transpose();
    return out;
}

EnergyEval smoothed_energy(const GaussianMixture& gmm, const Eigen::VectorXd& x, double t) {
    return SmoothedGmm(gmm, t).evaluate(x);
}

double convexity_threshold_bound(const GaussianMixture& gmm, const Box& domain) {
    gmm.validate();
    const int d = gmm.dim();
    GNC_REQUIRE(domain.lo.size() == d && domain.hi.size() == d, "domain dimension mismatch");
    GNC_REQUIRE((domain.hi - domain.lo).minCoeff() >= 0.0, "domain box must be nonempty");
    double best = 0.0;
    const long corners = 1L << d;
    for (long mask = 0; mask < corners; ++mask) {
        Eigen::VectorXd corner(d);
        for (int k = 0; k < d; ++k) corner(k) = (mask >> k) & 1 ? domain.hi(k) : domain.lo(k);
        for (const auto& mu : gmm.means) best = std::max(best, (corner - mu).squaredNorm());
    }
    return best;
}

NumericConvexityResult numeric_convexity_threshold(const GaussianMixture& gmm,
                                                   const std::vector<Eigen::VectorXd>& grid,
                                                   const std::vector<double>& t_candidates) {
    GNC_REQUIRE(!grid.empty(), "grid must be nonempty");
    GNC_REQUIRE(!t_candidates.empty(), "need at least one candidate t");
    GNC_REQUIRE(std::is_sorted(t_candidates.rbegin(), t_candidates.rend()),
                "t candidates must be sorted in decreasing order");
    const int d = gmm.dim();
    NumericConvexityResult res;
    for (double t : t_candidates) {
        const SmoothedGmm sm(gmm, t);
        double min_eig = std::numeric_limits<double>::infinity();
        for (const auto& x : grid) {
            const EnergyEval e = sm.evaluate(x);
            double lo;
            if (d == 1) {
                lo = e.hessian(0, 0);
            } else {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.hessian, Eigen::EigenvaluesOnly);
                lo = es.eigenvalues().minCoeff();
            }
            min_eig = std::min(min_eig, lo);
        }
        res.curve.emplace_back(t, min_eig);
        if (min_eig >= -1e-9) res.threshold = t;
    }
    return res;
}

double smoothed_cdf_1d(const GaussianMixture& gmm, double x, double t) {
    GNC_REQUIRE(gmm.dim() == 1, "CDF helper is 1D only");
    double acc = 0.0;
    for (int i = 0; i < gmm.size(); ++i) {
        const double sd = std::sqrt(gmm.covariances[i](0, 0) + t);
        acc += gmm.weights(i) * 0.5 * std::erfc(-(x - gmm.means[i](0)) / (sd * std::sqrt(2.0)));
    }
    return acc;
}

double smoothed_quantile_1d(const GaussianMixture& gmm, double q, double t) {
    GNC_REQUIRE(q > 0.0 && q < 1.0, "quantile must be inside (0,1)");
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < gmm.size(); ++i) {
        const double sd = std::sqrt(gmm.covariances[i](0, 0) + t);
        lo = std::min(lo, gmm.means[i](0) - 12.0 * sd);
        hi = std::max(hi, gmm.means[i](0) + 12.0 * sd);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (smoothed_cdf_1d(gmm, mid, t) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gnc::gmm
