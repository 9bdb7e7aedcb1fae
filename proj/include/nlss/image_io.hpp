#pragma once

#include <string>

#include "nlss/tensor.hpp"

namespace nlss {

/// Decodes an 8-bit grayscale PGM (P5) or an 8-bit grayscale/RGB PNG into a
/// float tensor in [0, 255]: H x W for grayscale, H x W x 3 for color.
/// Unsupported formats or bit depths raise a std::runtime_error naming the
/// file.
DenseTensor load_image(const std::string& path);

/// Writes PNG or PGM depending on the file extension. Values are rounded to
/// the nearest integer and clamped to [0, 255], so 8-bit data round-trips
/// bit-exactly.
void save_image(const DenseTensor& image, const std::string& path);

struct Volume {
    DenseTensor tensor;  // dim0 x dim1 x dim2
    double peak = 0.0;   // intensity ceiling D from the header
};

/// Raw little-endian volume container:
///   magic "NLSSVOL1" | u32 dim0,dim1,dim2 | f64 peak | float32 payload
/// with the payload ordered dim0-fastest (dim2-major).
Volume load_volume(const std::string& path);
void save_volume(const DenseTensor& volume, double peak, const std::string& path);

}  // namespace nlss
