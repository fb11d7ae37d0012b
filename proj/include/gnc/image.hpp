#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gnc/check.hpp"

namespace gnc {

// Dense real-valued image / feature tensor, channel-major storage
// (channel planes of rows x cols). Top-level images are grayscale
// (channels == 1); intermediate feature maps use more channels.
struct ImageTensor {
    int rows = 0;
    int cols = 0;
    int channels = 0;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(int r, int c, int ch) : rows(r), cols(c), channels(ch), data(static_cast<std::size_t>(r) * c * ch, 0.0) {
        GNC_REQUIRE(r > 0 && c > 0 && ch > 0, "image dimensions must be positive");
    }

    std::size_t size() const { return data.size(); }
    int pixels() const { return rows * cols; }

    double& at(int ch, int y, int x) { return data[(static_cast<std::size_t>(ch) * rows + y) * cols + x]; }
    double at(int ch, int y, int x) const { return data[(static_cast<std::size_t>(ch) * rows + y) * cols + x]; }

    double* plane(int ch) { return data.data() + static_cast<std::size_t>(ch) * rows * cols; }
    const double* plane(int ch) const { return data.data() + static_cast<std::size_t>(ch) * rows * cols; }

    bool same_shape(const ImageTensor& o) const {
        return rows == o.rows && cols == o.cols && channels == o.channels;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline ImageTensor zeros_like(const ImageTensor& t) { return ImageTensor(t.rows, t.cols, t.channels); }

inline double dot(const ImageTensor& a, const ImageTensor& b) {
    GNC_REQUIRE(a.same_shape(b), "dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline double squared_norm(const ImageTensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

// a += alpha * b
inline void axpy(ImageTensor& a, double alpha, const ImageTensor& b) {
    GNC_REQUIRE(a.same_shape(b), "axpy: shape mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += alpha * b.data[i];
}

inline double sum(const ImageTensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

}  // namespace gnc
