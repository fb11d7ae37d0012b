#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gnc/foe.hpp"
#include "gnc/gmm.hpp"
#include "gnc/image.hpp"
#include "gnc/rng.hpp"

namespace gnc::train {

struct TrainConfig {
    double t_hat_min = std::log(1e-4);
    double t_hat_max = 0.0;
    std::optional<double> m_t;  // default 1/d with d the patch pixel count
    int batch_size = 16;
    int patch_size = 32;
    int iterations = 5000;
    double lr_start = 1e-3;
    double lr_end = 5e-5;
    std::uint64_t seed = 0;
    int checkpoint_interval = 250;
    std::string rng = "splitmix64";
    bool freeze_conv = false;

    double resolved_m_t() const { return m_t ? *m_t : 1.0 / (static_cast<double>(patch_size) * patch_size); }
    void validate() const;

    static TrainConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct PatchCorpus {
    std::vector<ImageTensor> images;

    void validate(int patch_size) const;
};

struct TrainingSample {
    ImageTensor x;      // clean patch
    ImageTensor noise;  // i.i.d. standard normal
    double t_hat = 0.0;
};

// Draw order is pinned (image, row, col, noise entries, t_hat) so a seed
// fully determines the sample stream.
TrainingSample sample_training_point(const PatchCorpus& corpus, const TrainConfig& cfg,
                                     CounterRng& rng);

struct BatchResult {
    double loss = 0.0;
    std::vector<double> grad;
};
// Mean of per-sample loss_backprop outputs. Samples evaluate in parallel;
// the reduction runs in fixed index order so results are bit-reproducible
// for any thread count.
BatchResult batch_loss_and_grad(const foe::FoEModel& model, const TrainConfig& cfg,
                                const std::vector<TrainingSample>& batch);

struct TraceRow {
    int iteration;
    double loss;
    double lr;
};

struct TrainResult {
    foe::FoEModel model;
    std::vector<TraceRow> trace;
    bool aborted = false;  // non-finite loss; model holds the last checkpoint
};

using TrainCallback = std::function<void(int iteration, const foe::FoEModel&)>;

TrainResult train(foe::FoEModel model, const PatchCorpus& corpus, const TrainConfig& cfg,
                  const TrainCallback& on_checkpoint = nullptr);

// Draws one point from a 1D mixture.
double sample_gmm_1d(const gmm::GaussianMixture& g, CounterRng& rng);

struct ScoreErrorRow {
    double t;
    double rel_l2;   // ||learned - true|| / ||true|| over the percentile band
    double lo, hi;   // 5th / 95th percentile of the smoothed density
};

// Relative L2 error between the model's learned score -d/dx phi and the
// analytic smoothed score, per t, over the 5th..95th percentile band.
std::vector<ScoreErrorRow> score_error_report(const foe::FoEModel& model,
                                              const gmm::GaussianMixture& g,
                                              const std::vector<double>& t_eval, int grid = 512);

struct ScoreRecoveryResult {
    foe::FoEModel model;
    std::vector<ScoreErrorRow> report;
    std::vector<TraceRow> trace;
};

// Trains a scalar prior (identity 1x1 convolution, one activation) on
// mixture samples with the joint score-matching loss, then scores the
// learned -d/dx activation against the analytic smoothed score.
ScoreRecoveryResult train_1d_score_recovery(const gmm::GaussianMixture& g, const TrainConfig& cfg,
                                            const std::vector<double>& t_eval,
                                            int report_grid = 512);

}  // namespace gnc::train
