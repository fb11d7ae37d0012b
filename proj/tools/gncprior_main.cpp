#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <omp.h>

#include "gnc/check.hpp"
#include "gnc/experiments.hpp"

using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw gnc::InvalidInput("cannot open config: " + path);
    json j;
    in >> j;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* th = std::getenv("GNC_THREADS")) {
        const int n = std::atoi(th);
        if (n > 0) omp_set_num_threads(n);
    }

    CLI::App app{"Smoothed-energy priors: graduated non-convexity experiments"};
    app.require_subcommand(1);

    std::string config, out = "out", model, input, task;
    long long seed_override = -1;

    const auto add_config_cmd = [&](const std::string& name, const std::string& desc) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        cmd->add_option("--config", config, "JSON experiment config")->required();
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--seed", seed_override, "override the config seed");
        return cmd;
    };

    add_config_cmd("gmm-sweep", "convexity bound and min-curvature curve of a smoothed mixture");
    add_config_cmd("gnc-rate", "global-minimum attainment rates over (t0, steps) grids");
    add_config_cmd("train", "train an image prior on a PGM corpus");
    add_config_cmd("score-recovery", "train a 1D prior and score it against the analytic target");
    add_config_cmd("vn-train", "learn an unrolled schedule for a frozen prior");

    CLI::App* solve = app.add_subcommand("solve", "restore an image with a trained prior");
    solve->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);
    solve->add_option("--task", task, "task JSON {kind, sigma|missing, seed, solver, steps}")
        ->required()
        ->check(CLI::ExistingFile);
    solve->add_option("--input", input, "input PGM image")->required()->check(CLI::ExistingFile);
    solve->add_option("--out", out, "output directory");

    CLI::App* exp = app.add_subcommand("export-params", "dump kernels as PGM and activations as CSV");
    exp->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);
    exp->add_option("--out", out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        gnc::experiments::ExperimentSpec spec;
        spec.output_dir = out;
        if (solve->parsed()) {
            spec.name = "solve";
            spec.params = json{{"model", model}, {"input", input}, {"task", load_config(task)}};
        } else if (exp->parsed()) {
            spec.name = "export-params";
            spec.params = json{{"model", model}};
        } else {
            spec.name = app.get_subcommands().front()->get_name();
            spec.params = load_config(config);
            if (seed_override >= 0) {
                if (spec.params.contains("train"))
                    spec.params["train"]["seed"] = seed_override;
                spec.params["seed"] = seed_override;
            }
        }
        return gnc::experiments::run(spec);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
