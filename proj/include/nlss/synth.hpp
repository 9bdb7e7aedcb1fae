#pragma once

#include <cstdint>
#include <string>

#include "nlss/tensor.hpp"

namespace nlss {

enum class SynthKind { flat, piecewise, gradient };

SynthKind parse_synth_kind(const std::string& name);

/// Deterministic test scenes in [0, 255]: a constant field, seeded random
/// axis-aligned rectangles over a flat background, or a horizontal ramp.
/// channels must be 1 or 3.
DenseTensor make_synthetic(SynthKind kind, std::size_t height, std::size_t width,
                           std::size_t channels = 1, std::uint64_t seed = 0);

/// Piecewise-constant volume: seeded random boxes over a flat background.
DenseTensor make_synthetic_volume(std::size_t dim0, std::size_t dim1, std::size_t dim2,
                                  std::uint64_t seed = 0);

}  // namespace nlss
