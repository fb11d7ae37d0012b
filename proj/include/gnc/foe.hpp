#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "gnc/conv.hpp"
#include "gnc/flow.hpp"
#include "gnc/image.hpp"
#include "gnc/spline.hpp"

namespace gnc::foe {

using conv::Exec;

// Degree-2 Taylor jet of a feature tensor in the scalar log-smoothing
// direction: (value, d/dt_hat, d^2/dt_hat^2).
struct TJet {
    ImageTensor value;
    ImageTensor d1;
    ImageTensor d2;
};

struct FoELayer {
    conv::ConvOp op;
    std::vector<spline::SplineActivation2D> acts;  // one per output channel
};

// t_hat-conditioned Fields-of-Experts regularizer
//   R_L(y, t_hat) = <1, (Phi_L o K_L o ... o Phi_1 o K_1)(y)>.
// All activations share one grid; parameters are the conv kernels plus
// the spline weight matrices.
class FoEModel {
public:
    std::vector<FoELayer> layers;

    int depth() const { return static_cast<int>(layers.size()); }
    const spline::SplineGrid& grid() const { return layers.at(0).acts.at(0).grid(); }
    double t_hat_min() const { return grid().t_lo; }
    double t_hat_max() const { return grid().t_hi; }

    void validate() const;

    // Flat parameter vector: per layer, conv kernels then each activation's
    // weight matrix in column-major order.
    std::size_t param_count() const;
    std::vector<double> params() const;
    void set_params(const std::vector<double>& p);

    nlohmann::json to_json() const;
    static FoEModel from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static FoEModel load(const std::string& path);
};

// Single layer of DCT-initialized 7x7 filters with quadratic potentials.
FoEModel make_r1(double t_hat_min, double t_hat_max, int n_x = 63, int n_t = 16);

// DCT first layer, Kaiming 3x3 layers after; identity activations on the
// hidden layers and quadratic potentials on the last.
FoEModel make_deep(int depth, int channels, double t_hat_min, double t_hat_max,
                   std::uint64_t seed, int n_x = 63, int n_t = 16);

// Scalar model for 1D experiments: one 1x1 identity convolution and one
// activation, driven with 1x1 images.
FoEModel make_scalar_model(double t_hat_min, double t_hat_max, int n_x = 63, int n_t = 16);

double energy(const FoEModel& model, const ImageTensor& y, double t_hat, Exec exec = Exec::Serial);

struct ValueGrad {
    double value = 0.0;
    ImageTensor grad;
};
ValueGrad grad_x(const FoEModel& model, const ImageTensor& y, double t_hat,
                 Exec exec = Exec::Serial);

struct TDerivs {
    double dRdt = 0.0;
    double d2Rdt2 = 0.0;
};
// Exact first/second t_hat-derivatives by propagating TJets through the
// layers (Faa di Bruno to second order at every activation).
TDerivs t_derivatives(const FoEModel& model, const ImageTensor& y, double t_hat,
                      Exec exec = Exec::Serial);

struct DirGrad {
    double value = 0.0;
    ImageTensor grad;   // grad_y R
    ImageTensor dgrad;  // directional derivative of grad_y R
};
// grad_y R together with its exact directional derivative along
// (dir_x, dir_t): dir_x == nullptr means a pure t_hat direction, so
// dgrad = d/dt_hat grad_y R; dir_t == 0 with dir_x set gives the
// Hessian-vector product d^2_y R * dir_x.
DirGrad grad_x_directional(const FoEModel& model, const ImageTensor& y, double t_hat,
                           const ImageTensor* dir_x, double dir_t, Exec exec = Exec::Serial);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;  // flat, aligned with FoEModel::params()
};
// Per-sample joint score-matching loss
//   1/2 ||e^{t_hat/2} grad_y R - n||^2
//   + m_t/2 ((d/dt_hat R)^2 - 2 d^2/dt_hat^2 R)
// with its exact gradient in every conv kernel and spline weight.
LossGrad loss_backprop(const FoEModel& model, const ImageTensor& y, const ImageTensor& noise,
                       double t_hat, double m_t, Exec exec = Exec::Serial);

// Exposes a scalar-input model as a smoothed energy family over t
// (t_hat = log t), for cross-checks against the flow module.
class FoeEnergyFamily1D final : public flow::EnergyFamily {
public:
    explicit FoeEnergyFamily1D(const FoEModel& model) : model_(&model) {}
    int dim() const override { return 1; }
    void value_grad(const Eigen::VectorXd& x, double t, double& value,
                    Eigen::VectorXd& grad) const override;

private:
    const FoEModel* model_;
};

}  // namespace gnc::foe
