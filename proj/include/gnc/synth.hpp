#pragma once

#include <cstdint>
#include <vector>

#include "gnc/image.hpp"

namespace gnc::synth {

// Deterministic piecewise-smooth grayscale scene (ramps, shapes, smooth
// bumps, light texture) in [0,1]; stands in for natural-image patches at
// desk scale.
ImageTensor scene(int rows, int cols, std::uint64_t seed);

std::vector<ImageTensor> corpus(int count, int rows, int cols, std::uint64_t seed);

}  // namespace gnc::synth
