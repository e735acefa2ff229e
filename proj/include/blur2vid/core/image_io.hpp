#pragma once

#include <string>

#include "blur2vid/core/image.hpp"

namespace blur2vid {

// Reads a PNG file into an (H, W, 3) image in [0, 1]. Grayscale, palette
// and alpha inputs are converted to 8-bit RGB on the fly.
Image read_png(const std::string& path);

// Writes an image as 8-bit RGB PNG. Values are clamped to [0, 1] and
// quantized with round-to-nearest, so a write/read cycle moves any
// in-range pixel by at most 0.5/255.
void write_png(const std::string& path, const Image& img);

}  // namespace blur2vid
