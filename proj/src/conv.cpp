#include "gnc/conv.hpp"

#include <cmath>

#include "gnc/rng.hpp"

namespace gnc::conv {

int mirror_index(int i, int m) {
    if (i < 0) return -i - 1;
    if (i >= m) return 2 * m - 1 - i;
    return i;
}

ImageTensor pad_symmetric(const ImageTensor& in, int p) {
    GNC_REQUIRE(in.rows >= p && in.cols >= p, "image too small for mirror padding");
    ImageTensor out(in.rows + 2 * p, in.cols + 2 * p, in.channels);
    for (int c = 0; c < in.channels; ++c) {
        const double* src = in.plane(c);
        double* dst = out.plane(c);
        for (int y = 0; y < out.rows; ++y) {
            const int sy = mirror_index(y - p, in.rows);
            for (int x = 0; x < out.cols; ++x)
                dst[y * out.cols + x] = src[sy * in.cols + mirror_index(x - p, in.cols)];
        }
    }
    return out;
}

ImageTensor ConvOp::forward(const ImageTensor& in, Exec exec) const {
    GNC_REQUIRE(in.channels == n_in, "conv forward: channel mismatch");
    const int p = pad();
    const ImageTensor padded = pad_symmetric(in, p);
    ImageTensor out(in.rows, in.cols, n_out);
    const int rows = in.rows, cols = in.cols, pcols = padded.cols;
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) if (par) schedule(static)
    for (int o = 0; o < n_out; ++o) {
        for (int y = 0; y < rows; ++y) {
            double* dst = out.plane(o) + static_cast<std::size_t>(y) * cols;
            for (int i = 0; i < n_in; ++i) {
                const double* ker = &kernels[(static_cast<std::size_t>(o) * n_in + i) * k * k];
                const double* src = padded.plane(i);
                for (int ky = 0; ky < k; ++ky) {
                    const double* row = src + static_cast<std::size_t>(y + ky) * pcols;
                    for (int kx = 0; kx < k; ++kx) {
                        const double w = ker[ky * k + kx];
                        if (w == 0.0) continue;
                        for (int x = 0; x < cols; ++x) dst[x] += w * row[x + kx];
                    }
                }
            }
        }
    }
    return out;
}

ImageTensor ConvOp::adjoint(const ImageTensor& cotangent, Exec exec) const {
    GNC_REQUIRE(cotangent.channels == n_out, "conv adjoint: channel mismatch");
    const int p = pad();
    const int rows = cotangent.rows, cols = cotangent.cols;
    const int prows = rows + 2 * p, pcols = cols + 2 * p;
    ImageTensor out(rows, cols, n_in);
    const bool par = exec == Exec::Parallel;

    // Stage 1: scatter each cotangent plane into the padded frame as k*k
    // shifted axpy passes (contiguous, vectorizable), stage 2: fold padded
    // rows/cols back onto their mirror sources.
#pragma omp parallel for if (par) schedule(static)
    for (int i = 0; i < n_in; ++i) {
        std::vector<double> wbuf(static_cast<std::size_t>(prows) * pcols, 0.0);
        for (int o = 0; o < n_out; ++o) {
            const double* ker = &kernels[(static_cast<std::size_t>(o) * n_in + i) * k * k];
            const double* g = cotangent.plane(o);
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double w = ker[ky * k + kx];
                    if (w == 0.0) continue;
                    for (int y = 0; y < rows; ++y) {
                        double* wrow = wbuf.data() + static_cast<std::size_t>(y + ky) * pcols + kx;
                        const double* grow = g + static_cast<std::size_t>(y) * cols;
                        for (int x = 0; x < cols; ++x) wrow[x] += w * grow[x];
                    }
                }
            }
        }
        double* dst = out.plane(i);
        for (int ay = 0; ay < prows; ++ay) {
            const int sy = mirror_index(ay - p, rows);
            for (int ax = 0; ax < pcols; ++ax)
                dst[sy * cols + mirror_index(ax - p, cols)] += wbuf[static_cast<std::size_t>(ay) * pcols + ax];
        }
    }
    return out;
}

std::vector<double> ConvOp::kernel_grad(const ImageTensor& input, const ImageTensor& cotangent,
                                        Exec exec) const {
    GNC_REQUIRE(input.channels == n_in && cotangent.channels == n_out,
                "conv kernel_grad: channel mismatch");
    GNC_REQUIRE(input.rows == cotangent.rows && input.cols == cotangent.cols,
                "conv kernel_grad: spatial mismatch");
    const int p = pad();
    const ImageTensor padded = pad_symmetric(input, p);
    const int rows = input.rows, cols = input.cols, pcols = padded.cols;
    std::vector<double> grad(kernels.size(), 0.0);
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) if (par) schedule(static)
    for (int o = 0; o < n_out; ++o) {
        for (int i = 0; i < n_in; ++i) {
            double* kg = &grad[(static_cast<std::size_t>(o) * n_in + i) * k * k];
            const double* g = cotangent.plane(o);
            const double* src = padded.plane(i);
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    // four fixed partial sums: lets the reduction vectorize
                    // while keeping a deterministic summation order
                    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                    for (int y = 0; y < rows; ++y) {
                        const double* grow = g + static_cast<std::size_t>(y) * cols;
                        const double* srow = src + static_cast<std::size_t>(y + ky) * pcols + kx;
                        int x = 0;
                        for (; x + 4 <= cols; x += 4) {
                            a0 += grow[x] * srow[x];
                            a1 += grow[x + 1] * srow[x + 1];
                            a2 += grow[x + 2] * srow[x + 2];
                            a3 += grow[x + 3] * srow[x + 3];
                        }
                        for (; x < cols; ++x) a0 += grow[x] * srow[x];
                    }
                    kg[ky * k + kx] = ((a0 + a1) + (a2 + a3));
                }
            }
        }
    }
    return grad;
}

ConvOp dct_filters() {
    const int k = 7;
    ConvOp op(48, 1, k);
    int idx = 0;
    for (int u = 0; u < k; ++u) {
        const double au = u == 0 ? std::sqrt(1.0 / k) : std::sqrt(2.0 / k);
        for (int v = 0; v < k; ++v) {
            if (u == 0 && v == 0) continue;  // drop the DC filter
            const double av = v == 0 ? std::sqrt(1.0 / k) : std::sqrt(2.0 / k);
            for (int y = 0; y < k; ++y)
                for (int x = 0; x < k; ++x)
                    op.at(idx, 0, y, x) = au * av * std::cos(M_PI * (2 * y + 1) * u / (2.0 * k)) *
                                          std::cos(M_PI * (2 * x + 1) * v / (2.0 * k));
            ++idx;
        }
    }
    return op;
}

ConvOp kaiming_init(int n_out, int n_in, int k, std::uint64_t seed) {
    ConvOp op(n_out, n_in, k);
    const double sd = std::sqrt(2.0 / (n_in * k * k));
    CounterRng rng(seed);
    for (double& w : op.kernels) w = sd * rng.normal();
    return op;
}

}  // namespace gnc::conv
