#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gnc/csv.hpp"
#include "gnc/experiments.hpp"
#include "gnc/foe.hpp"
#include "gnc/pgm.hpp"
#include "gnc/synth.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using gnc::ImageTensor;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& n) const { return (path / n).string(); }
};

int count_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    int n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

}  // namespace

TEST_CASE("PGM load maps bytes to [0,1] by /255") {
    TempDir dir("gnc_pgm_a");
    {
        std::ofstream out(dir.file("x.pgm"), std::ios::binary);
        out << "P5\n2 2\n255\n";
        const unsigned char bytes[4] = {0, 255, 128, 64};
        out.write(reinterpret_cast<const char*>(bytes), 4);
    }
    const ImageTensor img = gnc::pgm::load(dir.file("x.pgm"));
    CHECK(img.rows == 2);
    CHECK(img.cols == 2);
    CHECK(img.at(0, 0, 0) == 0.0);
    CHECK(img.at(0, 0, 1) == 1.0);
    CHECK(img.at(0, 1, 0) == doctest::Approx(128.0 / 255.0));
    CHECK(img.at(0, 1, 1) == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("PGM round trip moves pixels by at most half a quantization step") {
    TempDir dir("gnc_pgm_b");
    const ImageTensor img = gnc::synth::scene(17, 23, 77);
    gnc::pgm::save(img, dir.file("s.pgm"));
    const ImageTensor back = gnc::pgm::load(dir.file("s.pgm"));
    REQUIRE(back.rows == img.rows);
    REQUIRE(back.cols == img.cols);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 1.0 / 510.0 + 1e-12);
    // comments and funny whitespace in the header are tolerated
    {
        std::ofstream out(dir.file("c.pgm"), std::ios::binary);
        out << "P5 # magic\n# a comment line\n 3\t2 # dims\n255\n";
        const unsigned char bytes[6] = {1, 2, 3, 4, 5, 6};
        out.write(reinterpret_cast<const char*>(bytes), 6);
    }
    CHECK(gnc::pgm::load(dir.file("c.pgm")).cols == 3);
}

TEST_CASE("PGM errors: truncation, magic, maxval") {
    TempDir dir("gnc_pgm_c");
    {
        std::ofstream out(dir.file("t.pgm"), std::ios::binary);
        out << "P5\n4 4\n255\n";
        out.write("\0\0\0", 3);  // 13 bytes short
    }
    CHECK_THROWS_AS(gnc::pgm::load(dir.file("t.pgm")), gnc::InvalidInput);
    {
        std::ofstream out(dir.file("m.pgm"), std::ios::binary);
        out << "P2\n1 1\n255\n0";
    }
    CHECK_THROWS_AS(gnc::pgm::load(dir.file("m.pgm")), gnc::InvalidInput);
    {
        std::ofstream out(dir.file("v.pgm"), std::ios::binary);
        out << "P5\n1 1\n65535\n";
        out.write("\0\0", 2);
    }
    CHECK_THROWS_AS(gnc::pgm::load(dir.file("v.pgm")), gnc::InvalidInput);
    CHECK_THROWS_AS(gnc::pgm::load(dir.file("missing.pgm")), gnc::InvalidInput);
}

TEST_CASE("CSV: header-only file for empty rows, 9-digit round trip, schema gate") {
    TempDir dir("gnc_csv");
    gnc::csv::emit({}, {"a", "b"}, dir.file("empty.csv"));
    {
        std::ifstream in(dir.file("empty.csv"));
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == "a,b");
        CHECK_FALSE(std::getline(in, line));
    }

    const double value = 0.12345678912345;
    gnc::csv::emit({{value, 3.0}}, {"x", "n"}, dir.file("one.csv"));
    {
        std::ifstream in(dir.file("one.csv"));
        std::string header, row;
        std::getline(in, header);
        std::getline(in, row);
        const double parsed = std::stod(row.substr(0, row.find(',')));
        CHECK(std::abs(parsed - value) <= 1e-9 * std::abs(value));
    }

    CHECK_THROWS_AS(gnc::csv::emit({{1.0}}, {"x", "y"}, dir.file("bad.csv")), gnc::InvalidInput);
    CHECK_FALSE(fs::exists(dir.file("empty.csv") + ".tmp"));
}

TEST_CASE("experiment specs are validated") {
    gnc::experiments::ExperimentSpec spec;
    spec.name = "frobnicate";
    spec.params = json::object();
    spec.output_dir = "/tmp/never";
    CHECK_THROWS_AS(gnc::experiments::run(spec), gnc::InvalidInput);

    spec.name = "export-params";
    spec.params = {{"model", "/nonexistent/model.json"}};
    CHECK_THROWS_AS(gnc::experiments::run(spec), gnc::InvalidInput);
}

TEST_CASE("gnc-rate experiment writes the (t0, I, rate) grid") {
    TempDir dir("gnc_rate_exp");
    gnc::experiments::ExperimentSpec spec;
    spec.name = "gnc-rate";
    spec.output_dir = dir.file("out");
    spec.params = {{"gmm", oracles::five_mode_mixture().to_json()},
                   {"n_starts", 64},
                   {"t0_grid", {1e-4, 1e-2, 1e-1, 1.0}},
                   {"steps_grid", {1, 10, 100}}};
    CHECK(gnc::experiments::run(spec) == 0);
    const std::string csv = spec.output_dir + "/rate.csv";
    REQUIRE(fs::exists(csv));
    CHECK(count_lines(csv) == 13);  // header + 12 grid cells
}

TEST_CASE("gmm-sweep emits a curve and a report") {
    TempDir dir("gnc_sweep_exp");
    gnc::experiments::ExperimentSpec spec;
    spec.name = "gmm-sweep";
    spec.output_dir = dir.file("out");
    spec.params = {{"gmm", oracles::five_mode_mixture().to_json()},
                   {"grid_points", 401},
                   {"t_candidates", 12}};
    CHECK(gnc::experiments::run(spec) == 0);
    REQUIRE(fs::exists(spec.output_dir + "/convexity_report.json"));
    std::ifstream in(spec.output_dir + "/convexity_report.json");
    json report;
    in >> report;
    CHECK(report.at("bound_t").get<double>() == doctest::Approx(16.0));
    CHECK(report.at("numeric_t").get<double>() <= 16.0);
    CHECK(count_lines(spec.output_dir + "/convexity_curve.csv") == 13);
}

TEST_CASE("export-params on a single-layer model writes 48 kernels and 48 activation tables") {
    TempDir dir("gnc_export_exp");
    const auto model = gnc::foe::make_r1(std::log(1e-4), 0.0);
    const std::string model_path = dir.file("model.json");
    model.save(model_path);

    gnc::experiments::ExperimentSpec spec;
    spec.name = "export-params";
    spec.output_dir = dir.file("out");
    spec.params = {{"model", model_path}};
    CHECK(gnc::experiments::run(spec) == 0);

    int pgms = 0, csvs = 0;
    for (const auto& e : fs::directory_iterator(spec.output_dir)) {
        if (e.path().extension() == ".pgm") ++pgms;
        if (e.path().extension() == ".csv") ++csvs;
    }
    CHECK(pgms == 48);
    CHECK(csvs == 48);
}

TEST_CASE("solve with an all-observed inpainting mask returns the observation") {
    TempDir dir("gnc_solve_exp");
    const auto model = gnc::foe::make_r1(std::log(1e-4), 0.0);
    const std::string model_path = dir.file("model.json");
    model.save(model_path);
    gnc::pgm::save(gnc::synth::scene(16, 16, 123), dir.file("input.pgm"));

    gnc::experiments::ExperimentSpec spec;
    spec.name = "solve";
    spec.output_dir = dir.file("out");
    spec.params = {{"model", model_path},
                   {"input", dir.file("input.pgm")},
                   {"task", {{"kind", "inpaint"}, {"missing", 0.0}, {"seed", 1}, {"steps", 4}}}};
    CHECK(gnc::experiments::run(spec) == 0);

    const ImageTensor obs = gnc::pgm::load(spec.output_dir + "/observation.pgm");
    const ImageTensor restored = gnc::pgm::load(spec.output_dir + "/restored.pgm");
    CHECK(obs.data == restored.data);
    CHECK(count_lines(spec.output_dir + "/steps.csv") == 6);  // header + steps 0..4
}

TEST_CASE("train experiment smoke: model file and loss trace appear") {
    TempDir dir("gnc_train_exp");
    fs::create_directories(dir.file("corpus"));
    for (int i = 0; i < 3; ++i)
        gnc::pgm::save(gnc::synth::scene(32, 32, 500 + i),
                       dir.file("corpus") + "/img" + std::to_string(i) + ".pgm");

    gnc::experiments::ExperimentSpec spec;
    spec.name = "train";
    spec.output_dir = dir.file("out");
    spec.params = {{"corpus_dir", dir.file("corpus")},
                   {"model", {{"depth", 1}, {"n_x", 17}, {"n_t", 5}}},
                   {"train",
                    {{"iterations", 12}, {"batch_size", 2}, {"patch_size", 16}, {"seed", 4},
                     {"checkpoint_interval", 5}}}};
    CHECK(gnc::experiments::run(spec) == 0);
    CHECK(fs::exists(spec.output_dir + "/model.json"));
    CHECK(count_lines(spec.output_dir + "/loss_trace.csv") == 13);
    // the saved model round-trips
    const auto m = gnc::foe::FoEModel::load(spec.output_dir + "/model.json");
    CHECK(m.depth() == 1);
}

TEST_CASE("score-recovery experiment smoke") {
    TempDir dir("gnc_score_exp");
    gnc::experiments::ExperimentSpec spec;
    spec.name = "score-recovery";
    spec.output_dir = dir.file("out");
    spec.params = {{"gmm", oracles::five_mode_mixture().to_json()},
                   {"t_eval", {1e-1}},
                   {"train", {{"iterations", 20}, {"batch_size", 4}, {"seed", 2}}}};
    CHECK(gnc::experiments::run(spec) == 0);
    CHECK(count_lines(spec.output_dir + "/score_report.csv") == 2);
    CHECK(fs::exists(spec.output_dir + "/model_1d.json"));
}

TEST_CASE("vn-train experiment smoke") {
    TempDir dir("gnc_vn_exp");
    const auto model = gnc::foe::make_r1(std::log(1e-4), 0.0, 17, 5);
    const std::string model_path = dir.file("model.json");
    model.save(model_path);

    gnc::experiments::ExperimentSpec spec;
    spec.name = "vn-train";
    spec.output_dir = dir.file("out");
    spec.params = {{"model", model_path},
                   {"task", {{"kind", "denoise"}, {"sigma", 0.1}}},
                   {"image_size", 16},
                   {"n_train", 2},
                   {"n_val", 2},
                   {"seed", 3},
                   {"steps", 3},
                   {"epochs", 2},
                   {"t0_candidates", {0.1}}};
    CHECK(gnc::experiments::run(spec) == 0);
    CHECK(fs::exists(spec.output_dir + "/vn.json"));
    CHECK(count_lines(spec.output_dir + "/vn_trace.csv") == 3);
    CHECK(fs::exists(spec.output_dir + "/vn_summary.json"));
}

TEST_CASE("scene generator is deterministic and in range") {
    const ImageTensor a = gnc::synth::scene(32, 32, 9);
    const ImageTensor b = gnc::synth::scene(32, 32, 9);
    CHECK(a.data == b.data);
    for (double v : a.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const ImageTensor c = gnc::synth::scene(32, 32, 10);
    CHECK(a.data != c.data);
}
