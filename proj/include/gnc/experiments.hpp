#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace gnc::experiments {

// One scripted experiment: a recognized name, a parameter document, and an
// output directory for the CSV/PGM/JSON artifacts.
struct ExperimentSpec {
    std::string name;
    nlohmann::json params;
    std::string output_dir;

    void validate() const;
};

// Runs the experiment; returns 0 on success. Deterministic under the
// seed(s) in params. Throws on unknown experiments, malformed configs or
// missing inputs.
int run(const ExperimentSpec& spec);

}  // namespace gnc::experiments
