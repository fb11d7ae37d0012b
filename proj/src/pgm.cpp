#include "gnc/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gnc/io_util.hpp"

namespace gnc::pgm {

namespace {

// Reads the next header token, skipping whitespace and # comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

ImageTensor load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    GNC_REQUIRE(in.good(), "cannot open PGM file: " + path);
    GNC_REQUIRE(next_token(in) == "P5", "not a binary PGM (P5) file: " + path);
    int cols = 0, rows = 0, maxval = 0;
    try {
        cols = std::stoi(next_token(in));
        rows = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw InvalidInput("malformed PGM header: " + path);
    }
    GNC_REQUIRE(cols > 0 && rows > 0, "malformed PGM dimensions: " + path);
    GNC_REQUIRE(maxval == 255, "unsupported PGM maxval (need 255): " + path);

    std::vector<unsigned char> raw(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    GNC_REQUIRE(static_cast<std::size_t>(in.gcount()) == raw.size(), "truncated PGM data: " + path);

    ImageTensor img(rows, cols, 1);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

void save(const ImageTensor& img, const std::string& path) {
    GNC_REQUIRE(img.channels == 1, "PGM output must be single-channel");
    std::string out = "P5\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) + "\n255\n";
    out.reserve(out.size() + img.size());
    for (double v : img.data) {
        const double q = std::round(v * 255.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(q, 0.0, 255.0))));
    }
    io::atomic_write_binary(path, out);
}

std::vector<ImageTensor> load_directory(const std::string& dir) {
    GNC_REQUIRE(std::filesystem::is_directory(dir), "corpus directory not found: " + dir);
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm") names.push_back(e.path().string());
    std::sort(names.begin(), names.end());
    std::vector<ImageTensor> images;
    images.reserve(names.size());
    for (const auto& n : names) images.push_back(load(n));
    return images;
}

}  // namespace gnc::pgm
