#pragma once

#include <cstdint>
#include <vector>

#include "gnc/image.hpp"

namespace gnc::conv {

// Execution policy for the data-parallel kernels. Serial is the reference
// path; Parallel distributes the same per-element work across OpenMP
// threads and produces bitwise-identical results.
enum class Exec { Serial, Parallel };

// Multi-channel 2D correlation with symmetric (mirror) boundary handling
// and no bias. The adjoint is exact: <K x, y> == <x, K^T y> up to
// floating-point roundoff.
struct ConvOp {
    int n_out = 0;
    int n_in = 0;
    int k = 0;                    // odd kernel size
    std::vector<double> kernels;  // [o][i][ky][kx]

    ConvOp() = default;
    ConvOp(int out, int in, int ksize)
        : n_out(out), n_in(in), k(ksize),
          kernels(static_cast<std::size_t>(out) * in * ksize * ksize, 0.0) {
        GNC_REQUIRE(out > 0 && in > 0 && ksize > 0 && ksize % 2 == 1,
                    "conv: dims positive, kernel size odd");
    }

    int pad() const { return k / 2; }
    std::size_t kernel_count() const { return kernels.size(); }

    double& at(int o, int i, int ky, int kx) {
        return kernels[((static_cast<std::size_t>(o) * n_in + i) * k + ky) * k + kx];
    }
    double at(int o, int i, int ky, int kx) const {
        return kernels[((static_cast<std::size_t>(o) * n_in + i) * k + ky) * k + kx];
    }

    ImageTensor forward(const ImageTensor& in, Exec exec = Exec::Serial) const;
    ImageTensor adjoint(const ImageTensor& cotangent, Exec exec = Exec::Serial) const;

    // d<cotangent, forward(input)>/d(kernels), flattened like `kernels`.
    std::vector<double> kernel_grad(const ImageTensor& input, const ImageTensor& cotangent,
                                    Exec exec = Exec::Serial) const;
};

// Mirror (half-sample symmetric) index fold: ...,2,1,0 | 0,1,...,m-1 | m-1,m-2,...
int mirror_index(int i, int m);

// Copy with p rows/cols of symmetric padding on each side.
ImageTensor pad_symmetric(const ImageTensor& in, int p);

// The 48 orthonormal 7x7 2D DCT-II basis filters with the constant filter
// removed, one input channel.
ConvOp dct_filters();

// Zero-mean Gaussian kernels with std sqrt(2 / (n_in * k^2)).
ConvOp kaiming_init(int n_out, int n_in, int k, std::uint64_t seed);

}  // namespace gnc::conv
