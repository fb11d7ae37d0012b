#include "gnc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>

#include "gnc/csv.hpp"
#include "gnc/flow.hpp"
#include "gnc/foe.hpp"
#include "gnc/gmm.hpp"
#include "gnc/io_util.hpp"
#include "gnc/pgm.hpp"
#include "gnc/rng.hpp"
#include "gnc/solvers.hpp"
#include "gnc/synth.hpp"
#include "gnc/training.hpp"

namespace gnc::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kKnown = {"gmm-sweep", "gnc-rate", "train", "score-recovery",
                                      "solve", "vn-train", "export-params"};

double cap_psnr(double v) { return std::min(v, 99.0); }

gmm::GaussianMixture load_gmm(const json& params) {
    if (params.contains("gmm_file")) {
        std::ifstream in(params.at("gmm_file").get<std::string>());
        GNC_REQUIRE(in.good(), "cannot open gmm_file");
        json j;
        in >> j;
        return gmm::GaussianMixture::from_json(j);
    }
    GNC_REQUIRE(params.contains("gmm"), "config needs a 'gmm' object or 'gmm_file' path");
    return gmm::GaussianMixture::from_json(params.at("gmm"));
}

std::string out_path(const ExperimentSpec& spec, const std::string& name) {
    fs::create_directories(spec.output_dir);
    return (fs::path(spec.output_dir) / name).string();
}

int run_gmm_sweep(const ExperimentSpec& spec) {
    const json& p = spec.params;
    const gmm::GaussianMixture g = load_gmm(p);
    GNC_REQUIRE(g.dim() == 1, "gmm-sweep is a 1D experiment");
    const double lo = p.value("domain_lo", -3.0), hi = p.value("domain_hi", 3.0);
    const int n_grid = p.value("grid_points", 2001);
    const int n_cand = p.value("t_candidates", 40);

    gmm::Box box;
    box.lo = Eigen::VectorXd::Constant(1, lo);
    box.hi = Eigen::VectorXd::Constant(1, hi);
    const double bound = gmm::convexity_threshold_bound(g, box);

    std::vector<Eigen::VectorXd> grid(n_grid);
    for (int i = 0; i < n_grid; ++i)
        grid[i] = Eigen::VectorXd::Constant(1, lo + (hi - lo) * i / (n_grid - 1.0));
    const double t_hi = p.value("t_hi", bound);
    const double t_lo = p.value("t_lo", 1e-4);
    std::vector<double> cands(n_cand);
    for (int i = 0; i < n_cand; ++i)
        cands[i] = std::pow(10.0, std::log10(t_hi) + (std::log10(t_lo) - std::log10(t_hi)) * i / (n_cand - 1.0));

    const auto res = gmm::numeric_convexity_threshold(g, grid, cands);

    std::vector<std::vector<double>> rows;
    for (const auto& [t, eig] : res.curve) rows.push_back({t, eig});
    csv::emit(rows, {"t", "min_second_derivative"}, out_path(spec, "convexity_curve.csv"));

    gmm::ConvexityReport report;
    report.bound_t = bound;
    report.numeric_t = res.threshold.value_or(std::numeric_limits<double>::quiet_NaN());
    report.grid_spec = std::to_string(n_grid) + " points on [" + std::to_string(lo) + "," +
                       std::to_string(hi) + "]";
    json rj{{"bound_t", report.bound_t}, {"grid_spec", report.grid_spec}};
    if (res.threshold) rj["numeric_t"] = report.numeric_t;
    io::atomic_write_text(out_path(spec, "convexity_report.json"), rj.dump(2));
    return res.threshold ? 0 : 1;
}

int run_gnc_rate(const ExperimentSpec& spec) {
    const json& p = spec.params;
    const flow::GmmEnergyFamily family(load_gmm(p));
    const double lo = p.value("domain_lo", -3.0), hi = p.value("domain_hi", 3.0);
    const int n_starts = p.value("n_starts", 1000);
    const double t_min = p.value("t_min", 1e-4);
    const double eta = p.value("eta", 1.0);
    const double target = p.value("target", 0.5);
    const double tol = p.value("tol", 0.1);
    const std::vector<double> t0s = p.value("t0_grid", std::vector<double>{1e-4, 1e-2, 1e-1, 1.0});
    const std::vector<int> steps = p.value("steps_grid", std::vector<int>{1, 10, 100});

    std::vector<std::vector<double>> rows;
    for (double t0 : t0s) {
        GNC_REQUIRE(t0 >= t_min, "t0 below the schedule floor");
        for (int I : steps) {
            const flow::Schedule sched = t0 > t_min ? flow::log_schedule(t0, t_min, I, eta)
                                                    : flow::constant_schedule(t0, I, eta);
            rows.push_back({t0, static_cast<double>(I),
                            flow::attainment_rate(family, n_starts, lo, hi, sched, target, tol)});
        }
    }
    csv::emit(rows, {"t0", "I", "rate"}, out_path(spec, "rate.csv"));
    return 0;
}

int run_train(const ExperimentSpec& spec) {
    const json& p = spec.params;
    const train::TrainConfig cfg = train::TrainConfig::from_json(p.value("train", json::object()));
    GNC_REQUIRE(p.contains("corpus_dir"), "train config needs corpus_dir");
    train::PatchCorpus corpus{pgm::load_directory(p.at("corpus_dir").get<std::string>())};
    corpus.validate(cfg.patch_size);

    const json mj = p.value("model", json::object());
    const int depth = mj.value("depth", 1);
    const int channels = mj.value("channels", 48);
    const int n_x = mj.value("n_x", 63);
    const int n_t = mj.value("n_t", 16);
    foe::FoEModel model =
        foe::make_deep(depth, channels, cfg.t_hat_min, cfg.t_hat_max, cfg.seed, n_x, n_t);

    const std::string model_path = out_path(spec, "model.json");
    const auto res = train::train(std::move(model), corpus, cfg,
                                  [&](int, const foe::FoEModel& m) { m.save(model_path); });
    res.model.save(model_path);

    std::vector<std::vector<double>> rows;
    for (const auto& r : res.trace)
        rows.push_back({static_cast<double>(r.iteration), r.loss, r.lr});
    csv::emit(rows, {"iteration", "loss", "lr"}, out_path(spec, "loss_trace.csv"));
    return res.aborted ? 1 : 0;
}

int run_score_recovery(const ExperimentSpec& spec) {
    const json& p = spec.params;
    const gmm::GaussianMixture g = load_gmm(p);
    train::TrainConfig cfg = train::TrainConfig::from_json(p.value("train", json::object()));
    const std::vector<double> t_eval = p.value("t_eval", std::vector<double>{1e-2, 1e-1, 1.0});

    const auto res = train::train_1d_score_recovery(g, cfg, t_eval);
    res.model.save(out_path(spec, "model_1d.json"));

    std::vector<std::vector<double>> rows;
    for (const auto& r : res.report) rows.push_back({r.t, r.rel_l2, r.lo, r.hi});
    csv::emit(rows, {"t", "rel_l2", "band_lo", "band_hi"}, out_path(spec, "score_report.csv"));
    std::vector<std::vector<double>> trace;
    for (const auto& r : res.trace)
        trace.push_back({static_cast<double>(r.iteration), r.loss, r.lr});
    csv::emit(trace, {"iteration", "loss", "lr"}, out_path(spec, "loss_trace.csv"));
    return 0;
}

// Builds the degraded observation and fidelity for a task document:
//   {"kind": "denoise", "sigma": 0.1, "seed": 7}
//   {"kind": "inpaint", "missing": 0.8, "seed": 7}
solve::FidelityTerm make_task_fidelity(const json& task, const ImageTensor& clean) {
    const std::string kind = task.at("kind").get<std::string>();
    CounterRng rng(task.value("seed", 0));
    if (kind == "denoise") {
        const double sigma = task.value("sigma", 0.1);
        GNC_REQUIRE(sigma > 0.0, "sigma must be positive");
        ImageTensor z = clean;
        for (double& v : z.data) v += sigma * rng.normal();
        return solve::FidelityTerm::denoising(std::move(z), sigma * sigma);
    }
    if (kind == "inpaint") {
        const double missing = task.value("missing", 0.8);
        GNC_REQUIRE(missing >= 0.0 && missing < 1.0, "missing fraction must be in [0,1)");
        ImageTensor mask(clean.rows, clean.cols, 1);
        for (double& v : mask.data) v = rng.uniform() < missing ? 0.0 : 1.0;
        ImageTensor z = clean;
        for (std::size_t i = 0; i < z.size(); ++i) z.data[i] *= mask.data[i];
        return solve::FidelityTerm::inpainting(std::move(z), std::move(mask));
    }
    throw InvalidInput("unknown task kind: " + kind);
}

int run_solve(const ExperimentSpec& spec) {
    const json& p = spec.params;
    const foe::FoEModel model = foe::FoEModel::load(p.at("model").get<std::string>());
    const ImageTensor input = pgm::load(p.at("input").get<std::string>());
    const json task = p.at("task");

    const solve::FidelityTerm fid = make_task_fidelity(task, input);
    pgm::save(fid.z, out_path(spec, "observation.pgm"));

    const std::string solver = task.value("solver", "fixed");
    const int steps = task.value("steps", 30);
    const double eta = task.value("eta", 1.0);
    const double margin = 1e-9;
    std::vector<std::vector<double>> rows;
    const auto observer = [&](int step, const ImageTensor& x, double t_hat) {
        const double energy = foe::energy(model, x, t_hat, foe::Exec::Parallel) + fid.value(x);
        rows.push_back({static_cast<double>(step), energy, cap_psnr(solve::psnr(x, input)), t_hat});
    };

    ImageTensor restored;
    if (solver == "fixed") {
        const double t0 = task.value("t0", std::exp(model.t_hat_max()) - margin);
        const double t_min = task.value("t_min", std::exp(model.t_hat_min()) + margin);
        const flow::Schedule sched = flow::log_schedule(t0, t_min, steps, eta);
        restored = solve::scheduled_solve(model, fid, fid.z, sched, foe::Exec::Parallel, observer);
    } else if (solver == "joint") {
        const double t_hat0 = task.value("t_hat0", model.t_hat_max());
        const auto res =
            solve::joint_minimize(model, fid, fid.z, t_hat0, eta, steps, foe::Exec::Parallel, observer);
        GNC_CHECK_FINITE(!res.aborted, "joint solve aborted on non-finite energy");
        restored = res.x;
    } else {
        throw InvalidInput("unknown solver: " + solver);
    }

    pgm::save(restored, out_path(spec, "restored.pgm"));
    csv::emit(rows, {"step", "energy", "psnr", "t_hat"}, out_path(spec, "steps.csv"));
    return 0;
}

int run_vn_train(const ExperimentSpec& spec) {
    const json& p = spec.params;
    const foe::FoEModel model = foe::FoEModel::load(p.at("model").get<std::string>());
    const json task = p.value("task", json{{"kind", "denoise"}, {"sigma", 0.1}});
    const int image_size = p.value("image_size", 48);
    const int n_train = p.value("n_train", 6);
    const int n_val = p.value("n_val", 4);
    const std::uint64_t seed = p.value("seed", 7);
    const int steps = p.value("steps", 30);
    const int epochs = p.value("epochs", 30);
    const double lr = p.value("lr", 1e-2);
    const double eta = p.value("eta", 1.0);

    const auto make_set = [&](int count, std::uint64_t salt) {
        std::vector<solve::VnSample> set;
        for (int i = 0; i < count; ++i) {
            json t = task;
            t["seed"] = seed + salt + 31ull * i;
            ImageTensor clean = synth::scene(image_size, image_size, seed + salt + 977ull * i);
            set.push_back({clean, make_task_fidelity(t, clean)});
        }
        return set;
    };
    const auto train_set = make_set(n_train, 100);
    const auto val_set = make_set(n_val, 50000);

    // pick the best fixed linear (in t_hat) schedule as initialization
    const double margin = 1e-9;
    const double t_min = std::exp(model.t_hat_min()) + margin;
    const std::vector<double> t0s =
        p.value("t0_candidates", std::vector<double>{0.01, 0.1, std::exp(model.t_hat_max()) - margin});
    double best_psnr = -1.0;
    flow::Schedule best_sched;
    for (double t0 : t0s) {
        const flow::Schedule sched = flow::log_schedule(t0, t_min, steps, eta);
        double acc = 0.0;
        for (const auto& s : val_set)
            acc += solve::psnr(
                solve::scheduled_solve(model, s.fid, s.fid.z, sched, foe::Exec::Parallel), s.clean);
        acc /= val_set.size();
        if (acc > best_psnr) {
            best_psnr = acc;
            best_sched = sched;
        }
    }

    const auto res = solve::vn_train(model, train_set, val_set, solve::vn_from_schedule(best_sched),
                                     epochs, lr, foe::Exec::Parallel);
    io::atomic_write_text(out_path(spec, "vn.json"), res.params.to_json().dump(2));

    std::vector<std::vector<double>> rows;
    for (const auto& r : res.trace)
        rows.push_back({static_cast<double>(r.epoch), r.train_mse, r.val_mse, cap_psnr(r.val_psnr)});
    csv::emit(rows, {"epoch", "train_mse", "val_mse", "val_psnr"}, out_path(spec, "vn_trace.csv"));

    json summary;
    summary["fixed_best_val_psnr"] = best_psnr;
    summary["init_val_mse"] = res.init_val_mse;
    double vn_psnr = 0.0;
    for (const auto& s : val_set)
        vn_psnr += solve::psnr(solve::vn_forward(model, res.params, s.fid, s.fid.z, foe::Exec::Parallel),
                               s.clean);
    summary["vn_val_psnr"] = vn_psnr / val_set.size();
    io::atomic_write_text(out_path(spec, "vn_summary.json"), summary.dump(2));
    return res.aborted ? 1 : 0;
}

int run_export_params(const ExperimentSpec& spec) {
    const json& p = spec.params;
    const foe::FoEModel model = foe::FoEModel::load(p.at("model").get<std::string>());
    const int t_samples = p.value("t_samples", 5);
    const int x_samples = p.value("x_samples", 201);

    char name[128];
    for (int li = 0; li < model.depth(); ++li) {
        const auto& layer = model.layers[li];
        for (int o = 0; o < layer.op.n_out; ++o) {
            for (int i = 0; i < layer.op.n_in; ++i) {
                ImageTensor img(layer.op.k, layer.op.k, 1);
                double lo = layer.op.at(o, i, 0, 0), hi = lo;
                for (int y = 0; y < layer.op.k; ++y)
                    for (int x = 0; x < layer.op.k; ++x) {
                        lo = std::min(lo, layer.op.at(o, i, y, x));
                        hi = std::max(hi, layer.op.at(o, i, y, x));
                    }
                const double span = hi > lo ? hi - lo : 1.0;
                for (int y = 0; y < layer.op.k; ++y)
                    for (int x = 0; x < layer.op.k; ++x)
                        img.at(0, y, x) = (layer.op.at(o, i, y, x) - lo) / span;
                if (layer.op.n_in == 1)
                    std::snprintf(name, sizeof(name), "kernel_l%d_c%02d.pgm", li + 1, o);
                else
                    std::snprintf(name, sizeof(name), "kernel_l%d_c%02d_in%02d.pgm", li + 1, o, i);
                pgm::save(img, out_path(spec, name));
            }
            std::vector<std::vector<double>> rows;
            const auto& grid = model.grid();
            for (int ti = 0; ti < t_samples; ++ti) {
                const double t_hat =
                    grid.t_lo + (grid.t_hi - grid.t_lo) * ti / std::max(1, t_samples - 1);
                for (int xi = 0; xi < x_samples; ++xi) {
                    const double x = grid.x_lo + (grid.x_hi - grid.x_lo) * xi / (x_samples - 1.0);
                    rows.push_back({x, t_hat, layer.acts[o].eval(x, t_hat, 0, 0)});
                }
            }
            std::snprintf(name, sizeof(name), "activation_l%d_c%02d.csv", li + 1, o);
            csv::emit(rows, {"x", "t_hat", "phi"}, out_path(spec, name));
        }
    }
    return 0;
}

}  // namespace

void ExperimentSpec::validate() const {
    GNC_REQUIRE(kKnown.count(name) == 1, "unknown experiment: " + name);
    GNC_REQUIRE(!output_dir.empty(), "output directory required");
    for (const char* key : {"model", "input", "corpus_dir", "gmm_file"}) {
        // `model` can also be a shape object (the train experiment)
        if (params.contains(key) && params.at(key).is_string()) {
            const std::string path = params.at(key).get<std::string>();
            GNC_REQUIRE(fs::exists(path), std::string("referenced file missing: ") + path);
        }
    }
}

int run(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.name == "gmm-sweep") return run_gmm_sweep(spec);
    if (spec.name == "gnc-rate") return run_gnc_rate(spec);
    if (spec.name == "train") return run_train(spec);
    if (spec.name == "score-recovery") return run_score_recovery(spec);
    if (spec.name == "solve") return run_solve(spec);
    if (spec.name == "vn-train") return run_vn_train(spec);
    return run_export_params(spec);
}

}  // namespace gnc::experiments
