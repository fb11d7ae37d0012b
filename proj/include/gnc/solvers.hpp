#pragma once

#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <utility>
#include <vector>

#include "gnc/fidelity.hpp"
#include "gnc/flow.hpp"
#include "gnc/foe.hpp"

namespace gnc::solve {

using foe::Exec;
using foe::FoEModel;

double psnr(const ImageTensor& x, const ImageTensor& reference);

// Called with (step, iterate, t_hat) at step 0 (the start point) and after
// every update.
using StepObserver = std::function<void(int, const ImageTensor&, double)>;

struct JointResult {
    ImageTensor x;
    double t_hat = 0.0;
    std::vector<std::pair<double, double>> trace;  // (joint energy, t_hat) per pre-step iterate
    bool aborted = false;
};

// Preconditioned proximal gradient on E(x, t_hat) = R_L + D: the x-step
// is scaled by e^{t_hat} (the local inverse Lipschitz scale), the
// projected t_hat-step by 1/d.
JointResult joint_minimize(const FoEModel& model, const FidelityTerm& fid, const ImageTensor& x0,
                           double t_hat0, double eta, int iters, Exec exec = Exec::Serial,
                           const StepObserver& observer = nullptr);

// Proximal-gradient flow over a fixed decreasing smoothing schedule
// (geometric in t, so linear in t_hat).
ImageTensor scheduled_solve(const FoEModel& model, const FidelityTerm& fid, const ImageTensor& x0,
                            const flow::Schedule& schedule, Exec exec = Exec::Serial,
                            const StepObserver& observer = nullptr);

// Learned unrolled scheme: I proximal-gradient steps with per-step
// smoothing t_hats[i] and step size etas[i] (no e^{t_hat} factor; the
// step sizes absorb it).
struct VNParams {
    std::vector<double> t_hats;
    std::vector<double> etas;

    int steps() const { return static_cast<int>(t_hats.size()); }
    void validate(double t_hat_min, double t_hat_max) const;

    nlohmann::json to_json() const;
    static VNParams from_json(const nlohmann::json& j);
};

// VN parameters reproducing scheduled_solve exactly: t_hats = log(values),
// etas = eta_i * values.
VNParams vn_from_schedule(const flow::Schedule& schedule);

ImageTensor vn_forward(const FoEModel& model, const VNParams& vn, const FidelityTerm& fid,
                       const ImageTensor& x0, Exec exec = Exec::Serial);

struct VnSample {
    ImageTensor clean;
    FidelityTerm fid;  // holds the degraded observation z
};

struct VnTraceRow {
    int epoch;
    double train_mse;
    double val_mse;
    double val_psnr;
};

struct VnTrainResult {
    VNParams params;  // best-on-validation parameters
    std::vector<VnTraceRow> trace;
    double init_val_mse = 0.0;
    bool aborted = false;
};

// Optimizes only the 2I schedule parameters of the unrolled scheme by
// exact reverse-mode differentiation through the recursion; t_hats are
// projected to the model's range and etas to positives after every step.
// The returned parameters are the validation-best iterate (the
// initialization included), so validation MSE never exceeds init_val_mse.
VnTrainResult vn_train(const FoEModel& model, const std::vector<VnSample>& train_set,
                       const std::vector<VnSample>& val_set, const VNParams& init, int epochs,
                       double lr, Exec exec = Exec::Serial);

// Endpoint loss ||x_I - clean||^2 and its gradient in (t_hats, etas) for
// one sample; exposed for derivative tests.
struct VnGrad {
    double loss = 0.0;
    std::vector<double> d_t_hats;
    std::vector<double> d_etas;
};
VnGrad vn_loss_grad(const FoEModel& model, const VNParams& vn, const VnSample& sample,
                    Exec exec = Exec::Serial);

}  // namespace gnc::solve
