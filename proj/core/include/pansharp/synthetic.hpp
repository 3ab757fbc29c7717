#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pansharp/dataset.hpp"
#include "pansharp/raster.hpp"

namespace pansharp {

/// Co-registered HR pair from the procedural generator.
struct SyntheticScene {
    RasterVolume ms;   // W x H x L
    RasterVolume pan;  // W x H x 1, weighted mean of the MS bands
};

/// Procedural scene: every band is a smooth band-specific field plus a shared
/// high-frequency structure (stripes, disks, rectangles) with a per-band gain,
/// so spatial detail is correlated across bands and visible in PAN. Values
/// stay inside [0.05, 0.95].
SyntheticScene synthetic_scene(std::size_t width, std::size_t height, std::size_t bands, std::uint64_t seed);

/// `count` Wald pairs, each cut from its own scene of (lr_size*scale)^2 pixels.
/// All pairs are tagged `split`.
std::vector<PatchPair> synthetic_pairs(std::size_t count, std::size_t lr_size, std::size_t bands, std::size_t scale,
                                       std::uint64_t seed, Split split = Split::train);

}  // namespace pansharp
