#include "gnc/synth.hpp"

#include <algorithm>
#include <cmath>

#include "gnc/rng.hpp"

namespace gnc::synth {

namespace {

void box_blur(ImageTensor& img) {
    ImageTensor tmp = img;
    for (int y = 0; y < img.rows; ++y)
        for (int x = 0; x < img.cols; ++x) {
            double s = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= img.rows || xx < 0 || xx >= img.cols) continue;
                    s += tmp.at(0, yy, xx);
                    ++n;
                }
            img.at(0, y, x) = s / n;
        }
}

}  // namespace

ImageTensor scene(int rows, int cols, std::uint64_t seed) {
    CounterRng rng(seed);
    ImageTensor img(rows, cols, 1);

    // background ramp
    const double g0 = rng.uniform(0.15, 0.85);
    const double gx = rng.uniform(-0.4, 0.4), gy = rng.uniform(-0.4, 0.4);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x)
            img.at(0, y, x) = g0 + gx * (x / static_cast<double>(cols) - 0.5) +
                              gy * (y / static_cast<double>(rows) - 0.5);

    // flat shapes with sharp edges
    const int n_shapes = 4 + static_cast<int>(rng.below(6));
    for (int s = 0; s < n_shapes; ++s) {
        const double level = rng.uniform(0.05, 0.95);
        if (rng.uniform() < 0.5) {  // disk
            const double cy = rng.uniform(0, rows), cx = rng.uniform(0, cols);
            const double r = rng.uniform(0.06, 0.28) * std::min(rows, cols);
            for (int y = 0; y < rows; ++y)
                for (int x = 0; x < cols; ++x)
                    if ((y - cy) * (y - cy) + (x - cx) * (x - cx) < r * r) img.at(0, y, x) = level;
        } else {  // rotated half-plane strip (a bar)
            const double th = rng.uniform(0, M_PI);
            const double c = std::cos(th), sn = std::sin(th);
            const double off = rng.uniform(-0.3, 0.3) * std::min(rows, cols);
            const double half_w = rng.uniform(0.04, 0.16) * std::min(rows, cols);
            for (int y = 0; y < rows; ++y)
                for (int x = 0; x < cols; ++x) {
                    const double proj = c * (x - cols / 2.0) + sn * (y - rows / 2.0) - off;
                    if (std::abs(proj) < half_w) img.at(0, y, x) = level;
                }
        }
    }

    // smooth bumps
    const int n_bumps = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < n_bumps; ++s) {
        const double cy = rng.uniform(0, rows), cx = rng.uniform(0, cols);
        const double amp = rng.uniform(-0.3, 0.3);
        const double sig = rng.uniform(0.08, 0.25) * std::min(rows, cols);
        for (int y = 0; y < rows; ++y)
            for (int x = 0; x < cols; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                img.at(0, y, x) += amp * std::exp(-0.5 * d2 / (sig * sig));
            }
    }

    // light smoothed texture
    ImageTensor tex(rows, cols, 1);
    for (double& v : tex.data) v = rng.normal();
    box_blur(tex);
    box_blur(tex);
    for (std::size_t i = 0; i < img.size(); ++i) img.data[i] += 0.015 * tex.data[i];

    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
    return img;
}

std::vector<ImageTensor> corpus(int count, int rows, int cols, std::uint64_t seed) {
    std::vector<ImageTensor> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(scene(rows, cols, seed + 1000003ull * i));
    return out;
}

}  // namespace gnc::synth
