#pragma once

#include <limits>

#include "gnc/image.hpp"

namespace gnc::solve {

// Data term D(z, .) with a closed-form proximal map. Gaussian denoising
// averages toward the observation; inpainting projects observed pixels
// (mask == 1) onto their measured values.
struct FidelityTerm {
    enum class Kind { GaussianDenoising, Inpainting };

    Kind kind = Kind::GaussianDenoising;
    ImageTensor z;      // observation
    double sigma2 = 0;  // noise variance (denoising)
    ImageTensor mask;   // 1 = observed (inpainting)

    static FidelityTerm denoising(ImageTensor obs, double sigma2) {
        GNC_REQUIRE(sigma2 > 0.0, "noise variance must be positive");
        FidelityTerm f;
        f.kind = Kind::GaussianDenoising;
        f.z = std::move(obs);
        f.sigma2 = sigma2;
        return f;
    }

    static FidelityTerm inpainting(ImageTensor obs, ImageTensor m) {
        GNC_REQUIRE(obs.same_shape(m), "mask shape mismatch");
        for (double v : m.data) GNC_REQUIRE(v == 0.0 || v == 1.0, "mask must be binary");
        FidelityTerm f;
        f.kind = Kind::Inpainting;
        f.z = std::move(obs);
        f.mask = std::move(m);
        return f;
    }

    ImageTensor prox(const ImageTensor& x, double tau) const {
        GNC_REQUIRE(x.same_shape(z), "prox: shape mismatch");
        GNC_REQUIRE(tau >= 0.0, "prox weight must be nonnegative");
        ImageTensor out = x;
        if (kind == Kind::GaussianDenoising) {
            const double r = tau / sigma2;
            const double inv = 1.0 / (1.0 + r);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.data[i] = (x.data[i] + r * z.data[i]) * inv;
        } else {
            for (std::size_t i = 0; i < out.size(); ++i)
                if (mask.data[i] == 1.0) out.data[i] = z.data[i];
        }
        return out;
    }

    // D(z, x); the inpainting indicator is 0 on consistent images.
    double value(const ImageTensor& x) const {
        GNC_REQUIRE(x.same_shape(z), "fidelity: shape mismatch");
        if (kind == Kind::GaussianDenoising) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x.data[i] - z.data[i];
                s += d * d;
            }
            return s / (2.0 * sigma2);
        }
        for (std::size_t i = 0; i < x.size(); ++i)
            if (mask.data[i] == 1.0 && x.data[i] != z.data[i])
                return std::numeric_limits<double>::infinity();
        return 0.0;
    }
};

}  // namespace gnc::solve
