#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>

#include "gnc/pgm.hpp"
#include "gnc/synth.hpp"

// Emits a deterministic synthetic grayscale corpus (PGM) for training and
// evaluation demos.
int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic PGM corpus"};
    std::string out = "corpus";
    int count = 20, size = 96;
    std::uint64_t seed = 1;
    app.add_option("--out", out, "output directory");
    app.add_option("--count", count, "number of images");
    app.add_option("--size", size, "image side length");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    std::filesystem::create_directories(out);
    char name[64];
    for (int i = 0; i < count; ++i) {
        std::snprintf(name, sizeof(name), "%s/scene_%03d.pgm", out.c_str(), i);
        gnc::pgm::save(gnc::synth::scene(size, size, seed + 1000003ull * i), name);
    }
    std::printf("wrote %d images to %s\n", count, out.c_str());
    return 0;
}
