#include "gnc/foe.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "gnc/io_util.hpp"

namespace gnc::foe {

using spline::ActivationProfile;
using spline::SplineActivation2D;
using spline::SplineGrid;

namespace {

std::vector<ActivationProfile> make_profiles(const FoELayer& layer, double t_hat, int max_dt) {
    std::vector<ActivationProfile> p;
    p.reserve(layer.acts.size());
    for (const auto& a : layer.acts) p.emplace_back(a, t_hat, max_dt);
    return p;
}

void check_input(const FoEModel& model, const ImageTensor& y, double t_hat) {
    GNC_REQUIRE(y.channels == model.layers.at(0).op.n_in, "input channel mismatch");
    GNC_REQUIRE(t_hat >= model.t_hat_min() && t_hat <= model.t_hat_max(),
                "t_hat outside the model's smoothing range");
}

// Sum over all entries with a per-channel partial pass so the result does
// not depend on the thread count.
double deterministic_sum(const ImageTensor& t, bool par) {
    std::vector<double> partial(t.channels, 0.0);
#pragma omp parallel for if (par) schedule(static)
    for (int c = 0; c < t.channels; ++c) {
        const double* p = t.plane(c);
        double s = 0.0;
        for (int i = 0; i < t.pixels(); ++i) s += p[i];
        partial[c] = s;
    }
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

}  // namespace

void FoEModel::validate() const {
    GNC_REQUIRE(!layers.empty(), "model needs at least one layer");
    GNC_REQUIRE(layers[0].op.n_in == 1, "first layer must consume one channel");
    const SplineGrid& g = grid();
    int prev = 1;
    for (const auto& layer : layers) {
        GNC_REQUIRE(layer.op.n_in == prev, "layer channel chain broken");
        GNC_REQUIRE(static_cast<int>(layer.acts.size()) == layer.op.n_out,
                    "one activation per output channel required");
        for (const auto& a : layer.acts) {
            GNC_REQUIRE(a.grid() == g, "all activations must share one grid");
            GNC_REQUIRE(a.weights().allFinite(), "activation weights must be finite");
        }
        for (double w : layer.op.kernels) GNC_REQUIRE(std::isfinite(w), "conv kernels must be finite");
        prev = layer.op.n_out;
    }
}

std::size_t FoEModel::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) {
        n += layer.op.kernel_count();
        for (const auto& a : layer.acts) n += static_cast<std::size_t>(a.weights().size());
    }
    return n;
}

std::vector<double> FoEModel::params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (const auto& layer : layers) {
        p.insert(p.end(), layer.op.kernels.begin(), layer.op.kernels.end());
        for (const auto& a : layer.acts)
            p.insert(p.end(), a.weights().data(), a.weights().data() + a.weights().size());
    }
    return p;
}

void FoEModel::set_params(const std::vector<double>& p) {
    GNC_REQUIRE(p.size() == param_count(), "parameter vector length mismatch");
    std::size_t off = 0;
    for (auto& layer : layers) {
        std::copy(p.begin() + off, p.begin() + off + layer.op.kernel_count(),
                  layer.op.kernels.begin());
        off += layer.op.kernel_count();
        for (auto& a : layer.acts) {
            std::copy(p.begin() + off, p.begin() + off + a.weights().size(), a.weights().data());
            off += a.weights().size();
        }
    }
}

double energy(const FoEModel& model, const ImageTensor& y, double t_hat, Exec exec) {
    check_input(model, y, t_hat);
    const bool par = exec == Exec::Parallel;
    ImageTensor cur = y;
    const int L = model.depth();
    for (int i = 0; i < L; ++i) {
        ImageTensor v = model.layers[i].op.forward(cur, exec);
        const auto prof = make_profiles(model.layers[i], t_hat, 0);
        if (i + 1 == L) {
            std::vector<double> partial(v.channels, 0.0);
#pragma omp parallel for if (par) schedule(static)
            for (int c = 0; c < v.channels; ++c) {
                const double* p = v.plane(c);
                double s = 0.0;
                for (int px = 0; px < v.pixels(); ++px) s += prof[c].at(p[px], 0).value(0, 0);
                partial[c] = s;
            }
            double s = 0.0;
            for (double val : partial) s += val;
            return s;
        }
        ImageTensor next(v.rows, v.cols, v.channels);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < v.channels; ++c) {
            const double* p = v.plane(c);
            double* q = next.plane(c);
            for (int px = 0; px < v.pixels(); ++px) q[px] = prof[c].at(p[px], 0).value(0, 0);
        }
        cur = std::move(next);
    }
    return 0.0;  // unreachable
}

ValueGrad grad_x(const FoEModel& model, const ImageTensor& y, double t_hat, Exec exec) {
    check_input(model, y, t_hat);
    const bool par = exec == Exec::Parallel;
    const int L = model.depth();

    std::vector<ImageTensor> v(L);
    std::vector<std::vector<ActivationProfile>> prof(L);
    ImageTensor cur = y;
    for (int i = 0; i < L; ++i) {
        v[i] = model.layers[i].op.forward(cur, exec);
        prof[i] = make_profiles(model.layers[i], t_hat, 0);
        if (i + 1 < L) {
            ImageTensor next(v[i].rows, v[i].cols, v[i].channels);
#pragma omp parallel for if (par) schedule(static)
            for (int c = 0; c < v[i].channels; ++c) {
                const double* p = v[i].plane(c);
                double* q = next.plane(c);
                for (int px = 0; px < v[i].pixels(); ++px) q[px] = prof[i][c].at(p[px], 0).value(0, 0);
            }
            cur = std::move(next);
        }
    }

    ValueGrad out;
    {
        std::vector<double> partial(v[L - 1].channels, 0.0);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < v[L - 1].channels; ++c) {
            const double* p = v[L - 1].plane(c);
            double s = 0.0;
            for (int px = 0; px < v[L - 1].pixels(); ++px) s += prof[L - 1][c].at(p[px], 0).value(0, 0);
            partial[c] = s;
        }
        for (double val : partial) out.value += val;
    }

    // backward: multiply by phi' and pull through the adjoint convolutions
    ImageTensor gv(v[L - 1].rows, v[L - 1].cols, v[L - 1].channels);
#pragma omp parallel for if (par) schedule(static)
    for (int c = 0; c < gv.channels; ++c) {
        const double* p = v[L - 1].plane(c);
        double* q = gv.plane(c);
        for (int px = 0; px < gv.pixels(); ++px) q[px] = prof[L - 1][c].at(p[px], 1).value(1, 0);
    }
    for (int i = L - 1;; --i) {
        ImageTensor gu = model.layers[i].op.adjoint(gv, exec);
        if (i == 0) {
            out.grad = std::move(gu);
            break;
        }
        ImageTensor next(gu.rows, gu.cols, gu.channels);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < gu.channels; ++c) {
            const double* p = v[i - 1].plane(c);
            const double* g = gu.plane(c);
            double* q = next.plane(c);
            for (int px = 0; px < gu.pixels(); ++px)
                q[px] = g[px] * prof[i - 1][c].at(p[px], 1).value(1, 0);
        }
        gv = std::move(next);
    }
    return out;
}

TDerivs t_derivatives(const FoEModel& model, const ImageTensor& y, double t_hat, Exec exec) {
    check_input(model, y, t_hat);
    const bool par = exec == Exec::Parallel;
    const int L = model.depth();

    TJet jet;
    jet.value = y;  // d1/d2 stay empty until the first activation emits them
    for (int i = 0; i < L; ++i) {
        const bool have_jets = i > 0;
        TJet lin;  // the convolution acts linearly on all three slots
        lin.value = model.layers[i].op.forward(jet.value, exec);
        if (have_jets) {
            lin.d1 = model.layers[i].op.forward(jet.d1, exec);
            lin.d2 = model.layers[i].op.forward(jet.d2, exec);
        }
        const auto prof = make_profiles(model.layers[i], t_hat, 2);

        TJet next;
        next.value = ImageTensor(lin.value.rows, lin.value.cols, lin.value.channels);
        next.d1 = ImageTensor(lin.value.rows, lin.value.cols, lin.value.channels);
        next.d2 = ImageTensor(lin.value.rows, lin.value.cols, lin.value.channels);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < lin.value.channels; ++c) {
            const double* bp = lin.value.plane(c);
            const double* dbp = have_jets ? lin.d1.plane(c) : nullptr;
            const double* ddbp = have_jets ? lin.d2.plane(c) : nullptr;
            double* nap = next.value.plane(c);
            double* ndap = next.d1.plane(c);
            double* nddap = next.d2.plane(c);
            for (int px = 0; px < lin.value.pixels(); ++px) {
                const auto pe = prof[c].at(bp[px], 2);
                const double x1 = pe.value(1, 0);
                const double u = have_jets ? dbp[px] : 0.0;
                const double uu = have_jets ? ddbp[px] : 0.0;
                // Faa di Bruno to second order through phi(b, t_hat)
                nap[px] = pe.value(0, 0);
                ndap[px] = x1 * u + pe.value(0, 1);
                nddap[px] = pe.value(2, 0) * u * u + 2.0 * pe.value(1, 1) * u + pe.value(0, 2) + x1 * uu;
            }
        }
        jet = std::move(next);
    }
    TDerivs out;
    out.dRdt = deterministic_sum(jet.d1, par);
    out.d2Rdt2 = deterministic_sum(jet.d2, par);
    return out;
}

DirGrad grad_x_directional(const FoEModel& model, const ImageTensor& y, double t_hat,
                           const ImageTensor* dir_x, double dir_t, Exec exec) {
    check_input(model, y, t_hat);
    if (dir_x) GNC_REQUIRE(dir_x->same_shape(y), "direction shape mismatch");
    const bool par = exec == Exec::Parallel;
    const int L = model.depth();

    std::vector<ImageTensor> v(L), dv(L);
    std::vector<std::vector<ActivationProfile>> prof(L);
    ImageTensor u = y;
    ImageTensor du = dir_x ? *dir_x : zeros_like(y);
    for (int i = 0; i < L; ++i) {
        v[i] = model.layers[i].op.forward(u, exec);
        dv[i] = model.layers[i].op.forward(du, exec);
        prof[i] = make_profiles(model.layers[i], t_hat, 1);
        if (i + 1 < L) {
            ImageTensor nu(v[i].rows, v[i].cols, v[i].channels), ndu(v[i].rows, v[i].cols, v[i].channels);
#pragma omp parallel for if (par) schedule(static)
            for (int c = 0; c < v[i].channels; ++c) {
                const double* vp = v[i].plane(c);
                const double* dvp = dv[i].plane(c);
                double* up = nu.plane(c);
                double* dup = ndu.plane(c);
                for (int px = 0; px < v[i].pixels(); ++px) {
                    const auto pe = prof[i][c].at(vp[px], 1);
                    up[px] = pe.value(0, 0);
                    dup[px] = pe.value(1, 0) * dvp[px] + pe.value(0, 1) * dir_t;
                }
            }
            u = std::move(nu);
            du = std::move(ndu);
        }
    }

    DirGrad out;
    {
        std::vector<double> partial(v[L - 1].channels, 0.0);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < v[L - 1].channels; ++c) {
            const double* p = v[L - 1].plane(c);
            double s = 0.0;
            for (int px = 0; px < v[L - 1].pixels(); ++px) s += prof[L - 1][c].at(p[px], 0).value(0, 0);
            partial[c] = s;
        }
        for (double val : partial) out.value += val;
    }

    ImageTensor gv(v[L - 1].rows, v[L - 1].cols, v[L - 1].channels);
    ImageTensor dgv(v[L - 1].rows, v[L - 1].cols, v[L - 1].channels);
#pragma omp parallel for if (par) schedule(static)
    for (int c = 0; c < gv.channels; ++c) {
        const double* vp = v[L - 1].plane(c);
        const double* dvp = dv[L - 1].plane(c);
        double* g = gv.plane(c);
        double* dg = dgv.plane(c);
        for (int px = 0; px < gv.pixels(); ++px) {
            const auto pe = prof[L - 1][c].at(vp[px], 2);
            g[px] = pe.value(1, 0);
            dg[px] = pe.value(2, 0) * dvp[px] + pe.value(1, 1) * dir_t;
        }
    }
    for (int i = L - 1;; --i) {
        ImageTensor gu = model.layers[i].op.adjoint(gv, exec);
        ImageTensor dgu = model.layers[i].op.adjoint(dgv, exec);
        if (i == 0) {
            out.grad = std::move(gu);
            out.dgrad = std::move(dgu);
            break;
        }
        ImageTensor ng(gu.rows, gu.cols, gu.channels), ndg(gu.rows, gu.cols, gu.channels);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < gu.channels; ++c) {
            const double* vp = v[i - 1].plane(c);
            const double* dvp = dv[i - 1].plane(c);
            const double* g = gu.plane(c);
            const double* dg = dgu.plane(c);
            double* q = ng.plane(c);
            double* dq = ndg.plane(c);
            for (int px = 0; px < gu.pixels(); ++px) {
                const auto pe = prof[i - 1][c].at(vp[px], 2);
                const double x1 = pe.value(1, 0);
                q[px] = g[px] * x1;
                dq[px] = dg[px] * x1 + g[px] * (pe.value(2, 0) * dvp[px] + pe.value(1, 1) * dir_t);
            }
        }
        gv = std::move(ng);
        dgv = std::move(ndg);
    }
    return out;
}

LossGrad loss_backprop(const FoEModel& model, const ImageTensor& y, const ImageTensor& noise,
                       double t_hat, double m_t, Exec exec) {
    check_input(model, y, t_hat);
    GNC_REQUIRE(noise.same_shape(y), "noise shape mismatch");
    GNC_REQUIRE(m_t > 0.0, "m_t must be positive");
    const bool par = exec == Exec::Parallel;
    const int L = model.depth();
    const double half_scale = std::exp(0.5 * t_hat);

    // primal chain
    std::vector<ImageTensor> u(L), v(L);
    std::vector<std::vector<ActivationProfile>> prof(L);
    u[0] = y;
    for (int i = 0; i < L; ++i) {
        v[i] = model.layers[i].op.forward(u[i], exec);
        prof[i] = make_profiles(model.layers[i], t_hat, 2);
        if (i + 1 < L) {
            ImageTensor next(v[i].rows, v[i].cols, v[i].channels);
#pragma omp parallel for if (par) schedule(static)
            for (int c = 0; c < v[i].channels; ++c) {
                const double* p = v[i].plane(c);
                double* q = next.plane(c);
                for (int px = 0; px < v[i].pixels(); ++px) q[px] = prof[i][c].at(p[px], 0).value(0, 0);
            }
            u[i + 1] = std::move(next);
        }
    }

    // grad_y R for the residual s = e^{t/2} grad_y R - n
    ImageTensor gv(v[L - 1].rows, v[L - 1].cols, v[L - 1].channels);
#pragma omp parallel for if (par) schedule(static)
    for (int c = 0; c < gv.channels; ++c) {
        const double* p = v[L - 1].plane(c);
        double* q = gv.plane(c);
        for (int px = 0; px < gv.pixels(); ++px) q[px] = prof[L - 1][c].at(p[px], 1).value(1, 0);
    }
    ImageTensor grad_y;
    for (int i = L - 1;; --i) {
        ImageTensor gu = model.layers[i].op.adjoint(gv, exec);
        if (i == 0) {
            grad_y = std::move(gu);
            break;
        }
        ImageTensor next(gu.rows, gu.cols, gu.channels);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < gu.channels; ++c) {
            const double* p = v[i - 1].plane(c);
            const double* g = gu.plane(c);
            double* q = next.plane(c);
            for (int px = 0; px < gu.pixels(); ++px)
                q[px] = g[px] * prof[i - 1][c].at(p[px], 1).value(1, 0);
        }
        gv = std::move(next);
    }

    ImageTensor s = grad_y;
    for (std::size_t i = 0; i < s.size(); ++i) s.data[i] = half_scale * s.data[i] - noise.data[i];

    // tangent chains: du propagates the residual direction, (da, dda) the
    // first/second t_hat jets
    std::vector<ImageTensor> du(L), dv(L), da(L), dda(L), db(L), ddb(L);
    du[0] = s;
    for (int i = 0; i < L; ++i) {
        dv[i] = model.layers[i].op.forward(du[i], exec);
        const bool have_jets = i > 0;
        if (have_jets) {
            db[i] = model.layers[i].op.forward(da[i], exec);
            ddb[i] = model.layers[i].op.forward(dda[i], exec);
        }
        if (i + 1 == L) break;
        ImageTensor ndu(v[i].rows, v[i].cols, v[i].channels), nda(v[i].rows, v[i].cols, v[i].channels),
            ndda(v[i].rows, v[i].cols, v[i].channels);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < v[i].channels; ++c) {
            const double* vp = v[i].plane(c);
            const double* dvp = dv[i].plane(c);
            const double* dbp = have_jets ? db[i].plane(c) : nullptr;
            const double* ddbp = have_jets ? ddb[i].plane(c) : nullptr;
            double* dup = ndu.plane(c);
            double* dap = nda.plane(c);
            double* ddap = ndda.plane(c);
            for (int px = 0; px < v[i].pixels(); ++px) {
                const auto pe = prof[i][c].at(vp[px], 2);
                const double x1 = pe.value(1, 0);
                const double jb = have_jets ? dbp[px] : 0.0;
                const double jbb = have_jets ? ddbp[px] : 0.0;
                dup[px] = x1 * dvp[px];
                dap[px] = x1 * jb + pe.value(0, 1);
                ddap[px] = pe.value(2, 0) * jb * jb + 2.0 * pe.value(1, 1) * jb + pe.value(0, 2) + x1 * jbb;
            }
        }
        du[i + 1] = std::move(ndu);
        da[i + 1] = std::move(nda);
        dda[i + 1] = std::move(ndda);
    }

    // last-layer jet outputs (the loop above stops before mapping them)
    double dRdt = 0.0, d2Rdt2 = 0.0;
    {
        const int i = L - 1;
        const bool have_jets = i > 0;
        std::vector<double> p1(v[i].channels, 0.0), p2(v[i].channels, 0.0);
#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < v[i].channels; ++c) {
            const double* vp = v[i].plane(c);
            const double* dbp = have_jets ? db[i].plane(c) : nullptr;
            const double* ddbp = have_jets ? ddb[i].plane(c) : nullptr;
            double s1 = 0.0, s2 = 0.0;
            for (int px = 0; px < v[i].pixels(); ++px) {
                const auto pe = prof[i][c].at(vp[px], 2);
                const double x1 = pe.value(1, 0);
                const double jb = have_jets ? dbp[px] : 0.0;
                const double jbb = have_jets ? ddbp[px] : 0.0;
                s1 += x1 * jb + pe.value(0, 1);
                s2 += pe.value(2, 0) * jb * jb + 2.0 * pe.value(1, 1) * jb + pe.value(0, 2) + x1 * jbb;
            }
            p1[c] = s1;
            p2[c] = s2;
        }
        for (int c = 0; c < v[i].channels; ++c) {
            dRdt += p1[c];
            d2Rdt2 += p2[c];
        }
    }

    LossGrad out;
    out.loss = 0.5 * squared_norm(s) + 0.5 * m_t * (dRdt * dRdt - 2.0 * d2Rdt2);
    out.grad.assign(model.param_count(), 0.0);

    // reverse pass; cotangent seeds at the (virtual) layer-L outputs
    const double seed_du = half_scale;        // d loss / d (sum of du_L)
    const double seed_da = m_t * dRdt;        // d loss / d (sum of da_L)
    const double seed_dda = -m_t;             // d loss / d (sum of dda_L)

    ImageTensor cu, cdu, cda, cdda;  // cotangents of u_{i+1}, du_{i+1}, da_{i+1}, dda_{i+1}

    // per-layer parameter offsets, walked backwards
    std::vector<std::size_t> conv_off(L), act_off(L);
    {
        std::size_t off = 0;
        for (int i = 0; i < L; ++i) {
            conv_off[i] = off;
            off += model.layers[i].op.kernel_count();
            act_off[i] = off;
            for (const auto& a : model.layers[i].acts) off += a.weights().size();
        }
    }

    for (int i = L - 1; i >= 0; --i) {
        const bool top = i == L - 1;
        const bool have_jets = i > 0;
        const int ch = v[i].channels, npx = v[i].pixels();
        ImageTensor cv(v[i].rows, v[i].cols, ch), cdv(v[i].rows, v[i].cols, ch);
        ImageTensor cdb(v[i].rows, v[i].cols, ch), cddb(v[i].rows, v[i].cols, ch);
        const SplineGrid& g = model.layers[i].acts[0].grid();
        const std::size_t wsize = static_cast<std::size_t>(g.n_x) * g.n_t;

#pragma omp parallel for if (par) schedule(static)
        for (int c = 0; c < ch; ++c) {
            const double* vp = v[i].plane(c);
            const double* dvp = dv[i].plane(c);
            const double* dbp = have_jets ? db[i].plane(c) : nullptr;
            const double* ddbp = have_jets ? ddb[i].plane(c) : nullptr;
            const double* cup = top ? nullptr : cu.plane(c);
            const double* cdup = top ? nullptr : cdu.plane(c);
            const double* cdap = top ? nullptr : cda.plane(c);
            const double* cddap = top ? nullptr : cdda.plane(c);
            double* cvp = cv.plane(c);
            double* cdvp = cdv.plane(c);
            double* cdbp = cdb.plane(c);
            double* cddbp = cddb.plane(c);
            Eigen::Map<Eigen::MatrixXd> wgrad(out.grad.data() + act_off[i] + c * wsize, g.n_x, g.n_t);
            for (int px = 0; px < npx; ++px) {
                const auto pe = prof[i][c].at(vp[px], 3);
                const double x1 = pe.value(1, 0);
                const double x2 = pe.value(2, 0);
                const double x3 = pe.value(3, 0);
                const double xt = pe.value(1, 1);
                const double xxt = pe.value(2, 1);
                const double xtt = pe.value(1, 2);
                const double jb = have_jets ? dbp[px] : 0.0;
                const double jbb = have_jets ? ddbp[px] : 0.0;
                const double a0 = top ? 0.0 : cup[px];
                const double a1 = top ? seed_du : cdup[px];
                const double b1 = top ? seed_da : cdap[px];
                const double b2 = top ? seed_dda : cddap[px];

                cvp[px] = a0 * x1 + a1 * x2 * dvp[px] + b1 * (x2 * jb + xt) +
                          b2 * (x3 * jb * jb + 2.0 * xxt * jb + xtt + x2 * jbb);
                cdvp[px] = a1 * x1;
                cdbp[px] = b1 * x1 + b2 * (2.0 * x2 * jb + 2.0 * xt);
                cddbp[px] = b2 * x1;

                if (a0 != 0.0) pe.add_weight_grad(0, 0, a0, wgrad);
                const double c10 = a1 * dvp[px] + b1 * jb + b2 * jbb;
                if (c10 != 0.0) pe.add_weight_grad(1, 0, c10, wgrad);
                pe.add_weight_grad(0, 1, b1, wgrad);
                if (have_jets) {
                    if (jb != 0.0) {
                        pe.add_weight_grad(2, 0, b2 * jb * jb, wgrad);
                        pe.add_weight_grad(1, 1, 2.0 * b2 * jb, wgrad);
                    }
                }
                pe.add_weight_grad(0, 2, b2, wgrad);
            }
        }

        // kernel gradients: cotangents of b = K u, db' = K du, jets likewise
        const auto& op = model.layers[i].op;
        std::vector<double> kg = op.kernel_grad(u[i], cv, exec);
        {
            const std::vector<double> kg2 = op.kernel_grad(du[i], cdv, exec);
            for (std::size_t j = 0; j < kg.size(); ++j) kg[j] += kg2[j];
        }
        if (have_jets) {
            const std::vector<double> kg3 = op.kernel_grad(da[i], cdb, exec);
            const std::vector<double> kg4 = op.kernel_grad(dda[i], cddb, exec);
            for (std::size_t j = 0; j < kg.size(); ++j) kg[j] += kg3[j] + kg4[j];
        }
        std::copy(kg.begin(), kg.end(), out.grad.begin() + conv_off[i]);

        if (i > 0) {
            cu = op.adjoint(cv, exec);
            cdu = op.adjoint(cdv, exec);
            cda = op.adjoint(cdb, exec);
            cdda = op.adjoint(cddb, exec);
        }
    }
    return out;
}

void FoeEnergyFamily1D::value_grad(const Eigen::VectorXd& x, double t, double& value,
                                   Eigen::VectorXd& grad) const {
    GNC_REQUIRE(x.size() == 1, "scalar family expects 1D points");
    GNC_REQUIRE(t > 0.0, "t must be positive");
    ImageTensor img(1, 1, 1);
    img.at(0, 0, 0) = x(0);
    const ValueGrad vg = grad_x(*model_, img, std::log(t));
    value = vg.value;
    grad = Eigen::VectorXd::Constant(1, vg.grad.at(0, 0, 0));
}

FoEModel make_r1(double t_hat_min, double t_hat_max, int n_x, int n_t) {
    const SplineGrid grid(n_x, n_t, t_hat_min, t_hat_max);
    FoEModel m;
    FoELayer layer;
    layer.op = conv::dct_filters();
    layer.acts.assign(layer.op.n_out, spline::init_quadratic(grid));
    m.layers.push_back(std::move(layer));
    m.validate();
    return m;
}

FoEModel make_deep(int depth, int channels, double t_hat_min, double t_hat_max, std::uint64_t seed,
                   int n_x, int n_t) {
    GNC_REQUIRE(depth >= 1, "depth must be at least 1");
    const SplineGrid grid(n_x, n_t, t_hat_min, t_hat_max);
    FoEModel m;
    {
        FoELayer layer;
        layer.op = conv::dct_filters();
        const auto act = depth == 1 ? spline::init_quadratic(grid) : spline::init_identity(grid);
        layer.acts.assign(layer.op.n_out, act);
        m.layers.push_back(std::move(layer));
    }
    int prev = 48;
    for (int i = 1; i < depth; ++i) {
        FoELayer layer;
        layer.op = conv::kaiming_init(channels, prev, 3, seed + i);
        const auto act = i + 1 == depth ? spline::init_quadratic(grid) : spline::init_identity(grid);
        layer.acts.assign(channels, act);
        prev = channels;
        m.layers.push_back(std::move(layer));
    }
    m.validate();
    return m;
}

FoEModel make_scalar_model(double t_hat_min, double t_hat_max, int n_x, int n_t) {
    const SplineGrid grid(n_x, n_t, t_hat_min, t_hat_max);
    FoEModel m;
    FoELayer layer;
    layer.op = conv::ConvOp(1, 1, 1);
    layer.op.at(0, 0, 0, 0) = 1.0;
    layer.acts.assign(1, SplineActivation2D(grid));
    m.layers.push_back(std::move(layer));
    m.validate();
    return m;
}

nlohmann::json FoEModel::to_json() const {
    validate();
    const SplineGrid& g = grid();
    nlohmann::json j;
    j["format_version"] = 1;
    j["grid"] = {{"n_x", g.n_x}, {"n_t", g.n_t}, {"x_lo", g.x_lo}, {"x_hi", g.x_hi},
                 {"t_hat_min", g.t_lo}, {"t_hat_max", g.t_hi}};
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : layers) {
        nlohmann::json lj;
        lj["conv"] = {{"n_out", layer.op.n_out}, {"n_in", layer.op.n_in}, {"k", layer.op.k},
                      {"kernels", layer.op.kernels}};
        lj["activations"] = nlohmann::json::array();
        for (const auto& a : layer.acts) {
            std::vector<double> w(a.weights().data(), a.weights().data() + a.weights().size());
            lj["activations"].push_back(w);
        }
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

FoEModel FoEModel::from_json(const nlohmann::json& j) {
    GNC_REQUIRE(j.at("format_version").get<int>() == 1, "unsupported model format version");
    const auto& gj = j.at("grid");
    SplineGrid grid(gj.at("n_x").get<int>(), gj.at("n_t").get<int>(),
                    gj.at("t_hat_min").get<double>(), gj.at("t_hat_max").get<double>());
    grid.x_lo = gj.at("x_lo").get<double>();
    grid.x_hi = gj.at("x_hi").get<double>();
    FoEModel m;
    for (const auto& lj : j.at("layers")) {
        FoELayer layer;
        const auto& cj = lj.at("conv");
        layer.op = conv::ConvOp(cj.at("n_out").get<int>(), cj.at("n_in").get<int>(),
                                cj.at("k").get<int>());
        const auto kv = cj.at("kernels").get<std::vector<double>>();
        GNC_REQUIRE(kv.size() == layer.op.kernel_count(), "model file: kernel size mismatch");
        layer.op.kernels = kv;
        for (const auto& aj : lj.at("activations")) {
            SplineActivation2D act(grid);
            const auto w = aj.get<std::vector<double>>();
            GNC_REQUIRE(w.size() == static_cast<std::size_t>(act.weights().size()),
                        "model file: activation weight count mismatch");
            std::copy(w.begin(), w.end(), act.weights().data());
            layer.acts.push_back(std::move(act));
        }
        m.layers.push_back(std::move(layer));
    }
    m.validate();
    return m;
}

void FoEModel::save(const std::string& path) const {
    io::atomic_write_text(path, to_json().dump());
}

FoEModel FoEModel::load(const std::string& path) {
    std::ifstream in(path);
    GNC_REQUIRE(in.good(), "cannot open model file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

}  // namespace gnc::foe
