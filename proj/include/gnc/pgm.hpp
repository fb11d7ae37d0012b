#pragma once

#include <string>
#include <vector>

#include "gnc/image.hpp"

namespace gnc::pgm {

// 8-bit binary PGM (P5, maxval 255); intensities map to [0,1] by /255 on
// load and round-to-nearest with clamping on save, so a round trip moves
// any pixel by at most 1/510.
ImageTensor load(const std::string& path);
void save(const ImageTensor& img, const std::string& path);

// All *.pgm files in a directory, sorted by filename.
std::vector<ImageTensor> load_directory(const std::string& dir);

}  // namespace gnc::pgm
