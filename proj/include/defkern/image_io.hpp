#pragma once

// Grayscale PGM (8/16-bit) and PNG (gray 8/16-bit, RGB 8-bit) image I/O.
// Pixel codes map to [0,1] by dividing by the format's max code; writes
// clamp to [0,1] and quantize by rounding.

#include <string>

#include "defkern/tensor.hpp"

namespace defkern {

// Grayscale load: [H,W]. Color PNG inputs are rejected here.
Tensor load_image(const std::string& path);

// Any supported image: returns [C,H,W] with C == 1 (gray) or 3 (RGB).
Tensor load_image_any(const std::string& path);

// Format by extension: .pgm / .png. 8 bits per sample.
void save_image(const std::string& path, const Tensor& gray);

// 16-bit variants for high-precision intermediates.
void save_image_16(const std::string& path, const Tensor& gray);

// 8-bit RGB PNG from a [3,H,W] tensor.
void save_image_rgb(const std::string& path, const Tensor& rgb);

}  // namespace defkern
