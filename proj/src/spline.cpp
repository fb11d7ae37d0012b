#include "gnc/spline.hpp"

#include <cmath>

namespace gnc::spline {

namespace {

// Branch polynomials in a = |x|, expanded from the piecewise quartic
// definition. Row b holds coefficients c0..c4 of sum_j c_j a^j valid on
// [b/2 ... ] : branch 0 on [0,1/2), branch 1 on [1/2,3/2), branch 2 on
// [3/2,5/2).
constexpr double kBranch[3][5] = {
    {115.0 / 192.0, 0.0, -5.0 / 8.0, 0.0, 1.0 / 4.0},
    {55.0 / 96.0, 5.0 / 24.0, -5.0 / 4.0, 5.0 / 6.0, -1.0 / 6.0},
    {625.0 / 384.0, -125.0 / 48.0, 25.0 / 16.0, -5.0 / 12.0, 1.0 / 24.0},
};

double eval_branch(const double* c, double a, int order) {
    switch (order) {
        case 0:
            return c[0] + a * (c[1] + a * (c[2] + a * (c[3] + a * c[4])));
        case 1:
            return c[1] + a * (2 * c[2] + a * (3 * c[3] + a * 4 * c[4]));
        case 2:
            return 2 * c[2] + a * (6 * c[3] + a * 12 * c[4]);
        default:
            return 6 * c[3] + a * 24 * c[4];
    }
}

}  // namespace

double quartic_kernel(double x, int order) {
    GNC_REQUIRE(order >= 0 && order <= 3, "quartic_kernel: order must be in 0..3");
    const double a = std::abs(x);
    if (a >= 2.5) return 0.0;
    const int branch = a < 0.5 ? 0 : (a < 1.5 ? 1 : 2);
    double v = eval_branch(kBranch[branch], a, order);
    if ((order & 1) && x < 0.0) v = -v;
    return v;
}

KernelWindow kernel_window(double pos, double lo, double gamma, int n_nodes, int max_order) {
    KernelWindow win;
    const double u = (pos - lo) / gamma;
    int l0 = static_cast<int>(std::ceil(u - 2.5));
    int l1 = static_cast<int>(std::floor(u + 2.5));
    if (l0 < 0) l0 = 0;
    if (l1 > n_nodes - 1) l1 = n_nodes - 1;
    if (l0 > l1) return win;
    win.first = l0;
    win.count = l1 - l0 + 1;
    double scale = 1.0;
    for (int order = 0; order <= max_order; ++order) {
        for (int j = 0; j < win.count; ++j) win.k[order][j] = scale * quartic_kernel(u - (l0 + j), order);
        scale /= gamma;
    }
    return win;
}

double SplineActivation2D::eval(double x, double t_hat, int dx, int dt) const {
    GNC_REQUIRE(dx >= 0 && dt >= 0 && dx <= 3 && dt <= 3 && dx + dt <= 3,
                "activation derivative order out of range");
    const KernelWindow xw = kernel_window(x, grid_.x_lo, grid_.gamma_x(), grid_.n_x, dx);
    const KernelWindow tw = kernel_window(t_hat, grid_.t_lo, grid_.gamma_t(), grid_.n_t, dt);
    double acc = 0.0;
    for (int i = 0; i < xw.count; ++i) {
        double row = 0.0;
        for (int j = 0; j < tw.count; ++j) row += w_(xw.first + i, tw.first + j) * tw.k[dt][j];
        acc += xw.k[dx][i] * row;
    }
    return acc;
}

Eigen::MatrixXd SplineActivation2D::weight_gradient(double x, double t_hat, int dx, int dt) const {
    GNC_REQUIRE(dx >= 0 && dt >= 0 && dx <= 3 && dt <= 3 && dx + dt <= 3,
                "activation derivative order out of range");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(grid_.n_x, grid_.n_t);
    const KernelWindow xw = kernel_window(x, grid_.x_lo, grid_.gamma_x(), grid_.n_x, dx);
    const KernelWindow tw = kernel_window(t_hat, grid_.t_lo, grid_.gamma_t(), grid_.n_t, dt);
    for (int i = 0; i < xw.count; ++i)
        for (int j = 0; j < tw.count; ++j) g(xw.first + i, tw.first + j) = xw.k[dx][i] * tw.k[dt][j];
    return g;
}

namespace {

// Least-squares fit of a polynomial target over a dense sample grid
// restricted to the reproduction band (where the truncated basis still
// sums to one); there the fit is exact up to solver roundoff and it
// coincides with the classical B-spline reproduction weights. Weights are
// constant along the t-axis.
SplineActivation2D init_fit(const SplineGrid& grid, double (*target)(double)) {
    const double gx = grid.gamma_x();
    const double lo = grid.x_lo + 1.5 * gx, hi = grid.x_hi - 1.5 * gx;
    const int per_gap = 8;
    const int n_samples = per_gap * (grid.n_x - 1) + 1;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(grid.n_x, grid.n_x);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid.n_x);
    const double step = (hi - lo) / (n_samples - 1);
    for (int s = 0; s < n_samples; ++s) {
        const double x = lo + s * step;
        const KernelWindow xw = kernel_window(x, grid.x_lo, gx, grid.n_x, 0);
        for (int i = 0; i < xw.count; ++i) {
            rhs(xw.first + i) += xw.k[0][i] * target(x);
            for (int j = 0; j < xw.count; ++j)
                gram(xw.first + i, xw.first + j) += xw.k[0][i] * xw.k[0][j];
        }
    }
    // samples never reach the outermost basis tails; a small ridge keeps
    // the normal equations solvable without moving the determined weights
    gram.diagonal().array() += 1e-10;
    const Eigen::VectorXd wx = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(rhs);
    SplineActivation2D act(grid);
    act.weights() = wx.replicate(1, grid.n_t);
    return act;
}

}  // namespace

SplineActivation2D init_identity(const SplineGrid& grid) {
    return init_fit(grid, [](double x) { return x; });
}

SplineActivation2D init_quadratic(const SplineGrid& grid) {
    return init_fit(grid, [](double x) { return 0.5 * x * x; });
}

ActivationProfile::ActivationProfile(const SplineActivation2D& act, double t_hat, int max_dt)
    : act_(&act), max_dt_(max_dt) {
    GNC_REQUIRE(max_dt >= 0 && max_dt <= 2, "profile supports dt orders 0..2");
    const SplineGrid& g = act.grid();
    tw_ = kernel_window(t_hat, g.t_lo, g.gamma_t(), g.n_t, max_dt);
    for (int dt = 0; dt <= max_dt_; ++dt) {
        wx_[dt].assign(g.n_x, 0.0);
        for (int l = 0; l < g.n_x; ++l) {
            double s = 0.0;
            for (int j = 0; j < tw_.count; ++j) s += act.weights()(l, tw_.first + j) * tw_.k[dt][j];
            wx_[dt][l] = s;
        }
    }
}

}  // namespace gnc::spline
