#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "gnc/check.hpp"

namespace gnc::spline {

// Piecewise-quartic C^3 kernel with support (-5/2, 5/2) (the centered
// degree-4 B-spline) or one of its first three derivatives.
double quartic_kernel(double x, int order);

// Equidistant tensor-product node grid in (feature, log-smoothing) space.
struct SplineGrid {
    int n_x = 63;
    int n_t = 16;
    double x_lo = -3.5;
    double x_hi = 3.5;
    double t_lo = 0.0;
    double t_hi = 1.0;

    SplineGrid() = default;
    SplineGrid(int nx, int nt, double tlo, double thi) : n_x(nx), n_t(nt), t_lo(tlo), t_hi(thi) {
        GNC_REQUIRE(n_x >= 2 && n_t >= 2, "spline grid needs at least 2 nodes per axis");
        GNC_REQUIRE(t_lo < t_hi, "spline grid t-range must be nonempty");
    }

    double gamma_x() const { return (x_hi - x_lo) / (n_x - 1); }
    double gamma_t() const { return (t_hi - t_lo) / (n_t - 1); }
    double node_x(int l) const { return x_lo + l * gamma_x(); }
    double node_t(int o) const { return t_lo + o * gamma_t(); }

    bool operator==(const SplineGrid&) const = default;
};

// Kernel values (orders 0..max_order, gamma^-order folded in) at the
// <=5 nodes whose support covers a query point on one axis.
struct KernelWindow {
    int first = 0;
    int count = 0;
    std::array<std::array<double, 5>, 4> k{};  // [order][node offset]
};

KernelWindow kernel_window(double pos, double lo, double gamma, int n_nodes, int max_order);

// One learnable 2D function phi(x, t_hat) = sum_{l,o} w(l,o)
// * phi((x - mu_x^l)/gamma_x) * phi((t_hat - mu_t^o)/gamma_t).
// Evaluation is linear in the weights; mixed partials up to total
// order 3 are exact.
class SplineActivation2D {
public:
    SplineActivation2D() = default;
    explicit SplineActivation2D(const SplineGrid& grid)
        : grid_(grid), w_(Eigen::MatrixXd::Zero(grid.n_x, grid.n_t)) {}

    const SplineGrid& grid() const { return grid_; }
    Eigen::MatrixXd& weights() { return w_; }
    const Eigen::MatrixXd& weights() const { return w_; }

    double eval(double x, double t_hat, int dx, int dt) const;

    // Dense matrix G with eval(x,t,dx,dt) == <weights, G> exactly.
    Eigen::MatrixXd weight_gradient(double x, double t_hat, int dx, int dt) const;

private:
    SplineGrid grid_;
    Eigen::MatrixXd w_;
};

// Least-squares initializers; weights are constant along the t-axis so
// every t-derivative of the initialized function is exactly zero.
SplineActivation2D init_identity(const SplineGrid& grid);
SplineActivation2D init_quadratic(const SplineGrid& grid);

// Activation pinned at a fixed t_hat: the t-axis sums are collapsed into
// per-dt-order 1D weight vectors so per-sample work touches <=5 nodes.
// Used by the image-prior hot loops where one t_hat serves a whole image.
class ActivationProfile {
public:
    ActivationProfile() = default;
    ActivationProfile(const SplineActivation2D& act, double t_hat, int max_dt);

    // All derivative orders at one input share a single kernel window.
    class PointEval {
    public:
        PointEval(const ActivationProfile& prof, double x, int max_dx)
            : prof_(&prof), xw_(kernel_window(x, prof.act_->grid().x_lo, prof.act_->grid().gamma_x(),
                                              prof.act_->grid().n_x, max_dx)) {}

        double value(int dx, int dt) const {
            const std::vector<double>& w = prof_->wx_[dt];
            double acc = 0.0;
            for (int i = 0; i < xw_.count; ++i) acc += xw_.k[dx][i] * w[xw_.first + i];
            return acc;
        }

        // acc += coeff * d(value(dx,dt))/d(weights)
        void add_weight_grad(int dx, int dt, double coeff, Eigen::Ref<Eigen::MatrixXd> acc) const {
            const KernelWindow& tw = prof_->tw_;
            for (int i = 0; i < xw_.count; ++i) {
                const double cx = coeff * xw_.k[dx][i];
                for (int j = 0; j < tw.count; ++j) acc(xw_.first + i, tw.first + j) += cx * tw.k[dt][j];
            }
        }

    private:
        const ActivationProfile* prof_;
        KernelWindow xw_;
    };

    PointEval at(double x, int max_dx) const { return PointEval(*this, x, max_dx); }

    double eval(double x, int dx, int dt) const {
        GNC_REQUIRE(dt <= max_dt_ && dx >= 0 && dx <= 3 && dx + dt <= 3,
                    "activation derivative order out of range");
        return at(x, dx).value(dx, dt);
    }

    // acc += coeff * d(eval(x,dx,dt))/d(weights)
    void accumulate_weight_grad(double x, int dx, int dt, double coeff,
                                Eigen::Ref<Eigen::MatrixXd> acc) const {
        GNC_REQUIRE(dt <= max_dt_ && dx >= 0 && dx <= 3 && dx + dt <= 3,
                    "activation derivative order out of range");
        at(x, dx).add_weight_grad(dx, dt, coeff, acc);
    }

private:
    const SplineActivation2D* act_ = nullptr;
    int max_dt_ = 0;
    std::array<std::vector<double>, 3> wx_;  // collapsed weights per dt order
    KernelWindow tw_;
};

}  // namespace gnc::spline
