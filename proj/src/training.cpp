#include "gnc/training.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "gnc/optim.hpp"

namespace gnc::train {

void TrainConfig::validate() const {
    GNC_REQUIRE(t_hat_min < t_hat_max, "t_hat range must be nonempty");
    GNC_REQUIRE(batch_size > 0 && patch_size > 0 && iterations > 0 && checkpoint_interval > 0,
                "counts must be positive");
    GNC_REQUIRE(lr_start >= lr_end && lr_end > 0.0, "need lr_start >= lr_end > 0");
    GNC_REQUIRE(!m_t || *m_t > 0.0, "m_t must be positive");
    GNC_REQUIRE(rng == "splitmix64", "unknown rng (this build provides splitmix64)");
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    if (j.contains("t_hat_min")) c.t_hat_min = j.at("t_hat_min").get<double>();
    if (j.contains("t_hat_max")) c.t_hat_max = j.at("t_hat_max").get<double>();
    if (j.contains("m_t")) c.m_t = j.at("m_t").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("patch_size")) c.patch_size = j.at("patch_size").get<int>();
    if (j.contains("iterations")) c.iterations = j.at("iterations").get<int>();
    if (j.contains("lr_start")) c.lr_start = j.at("lr_start").get<double>();
    if (j.contains("lr_end")) c.lr_end = j.at("lr_end").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("checkpoint_interval")) c.checkpoint_interval = j.at("checkpoint_interval").get<int>();
    if (j.contains("rng")) c.rng = j.at("rng").get<std::string>();
    if (j.contains("freeze_conv")) c.freeze_conv = j.at("freeze_conv").get<bool>();
    c.validate();
    return c;
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json j{{"t_hat_min", t_hat_min}, {"t_hat_max", t_hat_max},
                     {"batch_size", batch_size}, {"patch_size", patch_size},
                     {"iterations", iterations}, {"lr_start", lr_start},
                     {"lr_end", lr_end},         {"seed", seed},
                     {"checkpoint_interval", checkpoint_interval}, {"rng", rng},
                     {"freeze_conv", freeze_conv}};
    if (m_t) j["m_t"] = *m_t;
    return j;
}

void PatchCorpus::validate(int patch_size) const {
    GNC_REQUIRE(!images.empty(), "corpus is empty");
    for (const auto& img : images) {
        GNC_REQUIRE(img.channels == 1, "corpus images must be grayscale");
        GNC_REQUIRE(img.rows >= patch_size && img.cols >= patch_size,
                    "corpus image smaller than the patch size");
    }
}

TrainingSample sample_training_point(const PatchCorpus& corpus, const TrainConfig& cfg,
                                     CounterRng& rng) {
    corpus.validate(cfg.patch_size);
    const int p = cfg.patch_size;
    const auto& img = corpus.images[rng.below(corpus.images.size())];
    const int y0 = static_cast<int>(rng.below(img.rows - p + 1));
    const int x0 = static_cast<int>(rng.below(img.cols - p + 1));

    TrainingSample s;
    s.x = ImageTensor(p, p, 1);
    for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x) s.x.at(0, y, x) = img.at(0, y0 + y, x0 + x);
    s.noise = ImageTensor(p, p, 1);
    for (double& v : s.noise.data) v = rng.normal();
    s.t_hat = rng.uniform(cfg.t_hat_min, cfg.t_hat_max);
    return s;
}

namespace {

// Noisy observation y = x + e^{t_hat/2} n.
ImageTensor degrade(const TrainingSample& s) {
    ImageTensor y = s.x;
    const double sd = std::exp(0.5 * s.t_hat);
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += sd * s.noise.data[i];
    return y;
}

void zero_conv_grads(const foe::FoEModel& model, std::vector<double>& grad) {
    std::size_t off = 0;
    for (const auto& layer : model.layers) {
        std::fill(grad.begin() + off, grad.begin() + off + layer.op.kernel_count(), 0.0);
        off += layer.op.kernel_count();
        for (const auto& a : layer.acts) off += a.weights().size();
    }
}

}  // namespace

BatchResult batch_loss_and_grad(const foe::FoEModel& model, const TrainConfig& cfg,
                                const std::vector<TrainingSample>& batch) {
    GNC_REQUIRE(!batch.empty(), "batch must be nonempty");
    const int B = static_cast<int>(batch.size());
    const double m_t = cfg.resolved_m_t();
    std::vector<foe::LossGrad> per_sample(B);

    // exceptions may not unwind out of the parallel region
    std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < B; ++b) {
        try {
            const ImageTensor y = degrade(batch[b]);
            per_sample[b] = foe::loss_backprop(model, y, batch[b].noise, batch[b].t_hat, m_t);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    BatchResult out;
    out.grad.assign(model.param_count(), 0.0);
    for (int b = 0; b < B; ++b) {
        out.loss += per_sample[b].loss;
        const auto& g = per_sample[b].grad;
        for (std::size_t i = 0; i < g.size(); ++i) out.grad[i] += g[i];
    }
    const double inv = 1.0 / B;
    out.loss *= inv;
    for (double& v : out.grad) v *= inv;
    return out;
}

TrainResult train(foe::FoEModel model, const PatchCorpus& corpus, const TrainConfig& cfg,
                  const TrainCallback& on_checkpoint) {
    cfg.validate();
    corpus.validate(cfg.patch_size);
    model.validate();

    CounterRng rng(cfg.seed);
    std::vector<double> params = model.params();
    optim::AdaBeliefState opt(params.size());
    std::vector<double> checkpoint = params;

    TrainResult res;
    res.trace.reserve(cfg.iterations);
    for (int it = 0; it < cfg.iterations; ++it) {
        std::vector<TrainingSample> batch;
        batch.reserve(cfg.batch_size);
        for (int b = 0; b < cfg.batch_size; ++b)
            batch.push_back(sample_training_point(corpus, cfg, rng));

        BatchResult br = batch_loss_and_grad(model, cfg, batch);
        if (!std::isfinite(br.loss)) {
            res.aborted = true;
            model.set_params(checkpoint);
            res.model = std::move(model);
            return res;
        }
        if (cfg.freeze_conv) zero_conv_grads(model, br.grad);

        const double lr = optim::cosine_lr(it, cfg.iterations, cfg.lr_start, cfg.lr_end);
        optim::adabelief_step(opt, params, br.grad, lr);
        model.set_params(params);
        res.trace.push_back({it, br.loss, lr});

        if ((it + 1) % cfg.checkpoint_interval == 0) {
            checkpoint = params;
            if (on_checkpoint) on_checkpoint(it, model);
        }
    }
    res.model = std::move(model);
    return res;
}

double sample_gmm_1d(const gmm::GaussianMixture& g, CounterRng& rng) {
    GNC_REQUIRE(g.dim() == 1, "1D sampling requires a 1D mixture");
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = g.size() - 1;
    for (int i = 0; i < g.size(); ++i) {
        acc += g.weights(i);
        if (u < acc) {
            pick = i;
            break;
        }
    }
    return g.means[pick](0) + std::sqrt(g.covariances[pick](0, 0)) * rng.normal();
}

std::vector<ScoreErrorRow> score_error_report(const foe::FoEModel& model,
                                              const gmm::GaussianMixture& g,
                                              const std::vector<double>& t_eval, int grid) {
    GNC_REQUIRE(g.dim() == 1, "score report is a 1D diagnostic");
    std::vector<ScoreErrorRow> report;
    for (double t : t_eval) {
        ScoreErrorRow row;
        row.t = t;
        row.lo = gmm::smoothed_quantile_1d(g, 0.05, t);
        row.hi = gmm::smoothed_quantile_1d(g, 0.95, t);
        const double t_hat = std::log(t);
        const spline::ActivationProfile prof(model.layers.at(0).acts.at(0), t_hat, 0);
        const gmm::SmoothedGmm sm(g, t);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < grid; ++i) {
            const double x = row.lo + (row.hi - row.lo) * i / (grid - 1.0);
            const double learned = -prof.eval(x, 1, 0);
            double value;
            Eigen::VectorXd gr;
            sm.value_grad(Eigen::VectorXd::Constant(1, x), value, gr);
            const double truth = -gr(0);
            num += (learned - truth) * (learned - truth);
            den += truth * truth;
        }
        row.rel_l2 = std::sqrt(num / den);
        report.push_back(row);
    }
    return report;
}

ScoreRecoveryResult train_1d_score_recovery(const gmm::GaussianMixture& g, const TrainConfig& cfg,
                                            const std::vector<double>& t_eval, int report_grid) {
    GNC_REQUIRE(g.dim() == 1, "score recovery is a 1D experiment");
    TrainConfig c = cfg;
    c.patch_size = 1;
    c.freeze_conv = true;
    c.m_t = c.m_t ? c.m_t : std::optional<double>(1.0);
    c.validate();

    // potential initialized to the quadratic (a standard-normal energy
    // guess), the same recipe the image potentials use
    foe::FoEModel model = foe::make_scalar_model(c.t_hat_min, c.t_hat_max);
    model.layers[0].acts[0] = spline::init_quadratic(model.grid());

    CounterRng rng(c.seed);
    std::vector<double> params = model.params();
    optim::AdaBeliefState opt(params.size());

    ScoreRecoveryResult res;
    const double m_t = c.resolved_m_t();
    for (int it = 0; it < c.iterations; ++it) {
        std::vector<TrainingSample> batch(c.batch_size);
        for (auto& s : batch) {
            s.x = ImageTensor(1, 1, 1);
            s.x.at(0, 0, 0) = sample_gmm_1d(g, rng);
            s.noise = ImageTensor(1, 1, 1);
            s.noise.at(0, 0, 0) = rng.normal();
            s.t_hat = rng.uniform(c.t_hat_min, c.t_hat_max);
        }
        BatchResult br = batch_loss_and_grad(model, c, batch);
        GNC_CHECK_FINITE(std::isfinite(br.loss), "1D recovery training diverged");
        zero_conv_grads(model, br.grad);
        const double lr = optim::cosine_lr(it, c.iterations, c.lr_start, c.lr_end);
        optim::adabelief_step(opt, params, br.grad, lr);
        model.set_params(params);
        res.trace.push_back({it, br.loss, lr});
    }

    res.report = score_error_report(model, g, t_eval, report_grid);
    res.model = std::move(model);
    return res;
}

}  // namespace gnc::train
