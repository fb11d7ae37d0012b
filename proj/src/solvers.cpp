#include "gnc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "gnc/optim.hpp"

namespace gnc::solve {

double psnr(const ImageTensor& x, const ImageTensor& reference) {
    GNC_REQUIRE(x.same_shape(reference), "psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.data[i] - reference.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

JointResult joint_minimize(const FoEModel& model, const FidelityTerm& fid, const ImageTensor& x0,
                           double t_hat0, double eta, int iters, Exec exec,
                           const StepObserver& observer) {
    GNC_REQUIRE(t_hat0 >= model.t_hat_min() && t_hat0 <= model.t_hat_max(),
                "t_hat0 outside the model range");
    GNC_REQUIRE(eta >= 0.0, "eta must be nonnegative");
    JointResult res;
    res.x = x0;
    res.t_hat = t_hat0;
    const double d = static_cast<double>(x0.size());
    if (observer) observer(0, res.x, res.t_hat);
    for (int i = 0; i < iters; ++i) {
        const foe::ValueGrad vg = foe::grad_x(model, res.x, res.t_hat, exec);
        const foe::TDerivs td = foe::t_derivatives(model, res.x, res.t_hat, exec);
        const double energy = vg.value + fid.value(res.x);
        res.trace.emplace_back(energy, res.t_hat);
        if (!std::isfinite(energy)) {
            res.aborted = true;
            return res;
        }
        const double scale = eta * std::exp(res.t_hat);
        ImageTensor step = res.x;
        axpy(step, -scale, vg.grad);
        res.x = fid.prox(step, scale);
        res.t_hat = std::clamp(res.t_hat - eta / d * td.dRdt, model.t_hat_min(), model.t_hat_max());
        if (observer) observer(i + 1, res.x, res.t_hat);
    }
    const foe::ValueGrad vg = foe::grad_x(model, res.x, res.t_hat, exec);
    res.trace.emplace_back(vg.value + fid.value(res.x), res.t_hat);
    return res;
}

ImageTensor scheduled_solve(const FoEModel& model, const FidelityTerm& fid, const ImageTensor& x0,
                            const flow::Schedule& schedule, Exec exec, const StepObserver& observer) {
    schedule.validate();
    for (double t : schedule.values) {
        const double th = std::log(t);
        GNC_REQUIRE(th >= model.t_hat_min() && th <= model.t_hat_max(),
                    "schedule leaves the model's t_hat range");
    }
    ImageTensor x = x0;
    if (observer) observer(0, x, std::log(schedule.values.front()));
    for (int i = 0; i < schedule.steps(); ++i) {
        const double t = schedule.values[i];
        const double t_hat = std::log(t);
        const double scale = schedule.step_sizes[i] * t;  // eta * e^{t_hat}, computed from t exactly
        const foe::ValueGrad vg = foe::grad_x(model, x, t_hat, exec);
        GNC_CHECK_FINITE(vg.grad.all_finite(), "scheduled solve hit a non-finite gradient");
        axpy(x, -scale, vg.grad);
        x = fid.prox(x, scale);
        if (observer) observer(i + 1, x, t_hat);
    }
    return x;
}

void VNParams::validate(double t_hat_min, double t_hat_max) const {
    GNC_REQUIRE(!t_hats.empty(), "VN needs at least one step");
    GNC_REQUIRE(t_hats.size() == etas.size(), "VN parameter lists must match in length");
    for (double th : t_hats)
        GNC_REQUIRE(th >= t_hat_min && th <= t_hat_max, "VN t_hat outside bounds");
    for (double e : etas) GNC_REQUIRE(e >= 0.0, "VN step sizes must be nonnegative");
}

nlohmann::json VNParams::to_json() const {
    return nlohmann::json{{"t_hats", t_hats}, {"etas", etas}};
}

VNParams VNParams::from_json(const nlohmann::json& j) {
    VNParams v;
    v.t_hats = j.at("t_hats").get<std::vector<double>>();
    v.etas = j.at("etas").get<std::vector<double>>();
    GNC_REQUIRE(v.t_hats.size() == v.etas.size(), "VN parameter lists must match in length");
    return v;
}

VNParams vn_from_schedule(const flow::Schedule& schedule) {
    schedule.validate();
    VNParams v;
    for (int i = 0; i < schedule.steps(); ++i) {
        v.t_hats.push_back(std::log(schedule.values[i]));
        v.etas.push_back(schedule.step_sizes[i] * schedule.values[i]);
    }
    return v;
}

ImageTensor vn_forward(const FoEModel& model, const VNParams& vn, const FidelityTerm& fid,
                       const ImageTensor& x0, Exec exec) {
    vn.validate(model.t_hat_min(), model.t_hat_max());
    ImageTensor x = x0;
    for (int i = 0; i < vn.steps(); ++i) {
        const foe::ValueGrad vg = foe::grad_x(model, x, vn.t_hats[i], exec);
        GNC_CHECK_FINITE(vg.grad.all_finite(), "VN forward hit a non-finite gradient");
        axpy(x, -vn.etas[i], vg.grad);
        x = fid.prox(x, vn.etas[i]);
    }
    return x;
}

VnGrad vn_loss_grad(const FoEModel& model, const VNParams& vn, const VnSample& sample, Exec exec) {
    vn.validate(model.t_hat_min(), model.t_hat_max());
    const int I = vn.steps();
    std::vector<ImageTensor> xs(I + 1);
    xs[0] = sample.fid.z;
    for (int i = 0; i < I; ++i) {
        const foe::ValueGrad vg = foe::grad_x(model, xs[i], vn.t_hats[i], exec);
        ImageTensor q = xs[i];
        axpy(q, -vn.etas[i], vg.grad);
        xs[i + 1] = sample.fid.prox(q, vn.etas[i]);
    }

    VnGrad out;
    out.d_t_hats.assign(I, 0.0);
    out.d_etas.assign(I, 0.0);
    ImageTensor diff = xs[I];
    axpy(diff, -1.0, sample.clean);
    out.loss = squared_norm(diff);

    // cotangent of the current iterate, seeded at x_I
    ImageTensor cx = diff;
    for (double& v : cx.data) v *= 2.0;

    for (int i = I - 1; i >= 0; --i) {
        // pull through the prox
        ImageTensor c = cx;
        if (sample.fid.kind == FidelityTerm::Kind::GaussianDenoising) {
            const double jac = 1.0 / (1.0 + vn.etas[i] / sample.fid.sigma2);
            // d prox / d tau = (z - prox) / (sigma^2 (1 + tau/sigma^2))
            double acc = 0.0;
            for (std::size_t j = 0; j < c.size(); ++j) {
                acc += cx.data[j] * (sample.fid.z.data[j] - xs[i + 1].data[j]);
                c.data[j] *= jac;
            }
            out.d_etas[i] += acc * jac / sample.fid.sigma2;
        } else {
            for (std::size_t j = 0; j < c.size(); ++j)
                if (sample.fid.mask.data[j] == 1.0) c.data[j] = 0.0;
        }

        // pull through q = x_i - eta_i * grad_x R(x_i, t_hat_i)
        const foe::DirGrad hvp = foe::grad_x_directional(model, xs[i], vn.t_hats[i], &c, 0.0, exec);
        const foe::DirGrad tdir = foe::grad_x_directional(model, xs[i], vn.t_hats[i], nullptr, 1.0, exec);
        out.d_etas[i] += -dot(c, hvp.grad);
        out.d_t_hats[i] += -vn.etas[i] * dot(c, tdir.dgrad);
        cx = c;
        axpy(cx, -vn.etas[i], hvp.dgrad);
    }
    return out;
}

namespace {

double mean_mse(const FoEModel& model, const VNParams& vn, const std::vector<VnSample>& set,
                Exec exec) {
    double acc = 0.0;
    for (const auto& s : set) {
        const ImageTensor x = vn_forward(model, vn, s.fid, s.fid.z, exec);
        ImageTensor d = x;
        axpy(d, -1.0, s.clean);
        acc += squared_norm(d) / static_cast<double>(d.size());
    }
    return acc / static_cast<double>(set.size());
}

double mean_psnr_of(const FoEModel& model, const VNParams& vn, const std::vector<VnSample>& set,
                    Exec exec) {
    double acc = 0.0;
    for (const auto& s : set) acc += psnr(vn_forward(model, vn, s.fid, s.fid.z, exec), s.clean);
    return acc / static_cast<double>(set.size());
}

}  // namespace

VnTrainResult vn_train(const FoEModel& model, const std::vector<VnSample>& train_set,
                       const std::vector<VnSample>& val_set, const VNParams& init, int epochs,
                       double lr, Exec exec) {
    GNC_REQUIRE(!train_set.empty() && !val_set.empty(), "VN training needs data");
    GNC_REQUIRE(epochs >= 1, "epochs must be positive");
    init.validate(model.t_hat_min(), model.t_hat_max());
    const int I = init.steps();
    const int n_train = static_cast<int>(train_set.size());

    VnTrainResult res;
    res.params = init;
    res.init_val_mse = mean_mse(model, init, val_set, exec);
    double best_val = res.init_val_mse;

    VNParams cur = init;
    std::vector<double> flat(2 * I);
    for (int i = 0; i < I; ++i) {
        flat[i] = cur.t_hats[i];
        flat[I + i] = cur.etas[i];
    }
    optim::AdaBeliefState opt(flat.size());

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::vector<VnGrad> per_sample(n_train);
        std::exception_ptr failure = nullptr;
#pragma omp parallel for if (exec == Exec::Parallel) schedule(dynamic)
        for (int s = 0; s < n_train; ++s) {
            try {
                per_sample[s] = vn_loss_grad(model, cur, train_set[s], Exec::Serial);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);

        double train_loss = 0.0;
        std::vector<double> grad(2 * I, 0.0);
        for (int s = 0; s < n_train; ++s) {
            train_loss += per_sample[s].loss;
            for (int i = 0; i < I; ++i) {
                grad[i] += per_sample[s].d_t_hats[i];
                grad[I + i] += per_sample[s].d_etas[i];
            }
        }
        train_loss /= n_train;
        for (double& g : grad) g /= n_train;
        if (!std::isfinite(train_loss)) {
            res.aborted = true;
            return res;
        }

        optim::adabelief_step(opt, flat, grad, lr);
        for (int i = 0; i < I; ++i) {
            cur.t_hats[i] = std::clamp(flat[i], model.t_hat_min(), model.t_hat_max());
            cur.etas[i] = std::max(flat[I + i], 1e-8);
            flat[i] = cur.t_hats[i];
            flat[I + i] = cur.etas[i];
        }

        const double val = mean_mse(model, cur, val_set, exec);
        const double vp = mean_psnr_of(model, cur, val_set, exec);
        const double train_mse = train_loss / static_cast<double>(train_set[0].clean.size());
        res.trace.push_back({epoch, train_mse, val, vp});
        if (val < best_val) {
            best_val = val;
            res.params = cur;
        }
    }
    return res;
}

}  // namespace gnc::solve
