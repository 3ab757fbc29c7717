#pragma once

#include <cstddef>

#include "pansharp/raster.hpp"

namespace pansharp {

inline constexpr double kKeysA = -0.5;

/// Keys cubic convolution kernel.
double cubic_kernel(double t, double a = kKeysA);

enum class ResampleDirection { up, down };

/// Integer-factor bicubic resampling. Half-pixel centres, clamp-to-edge.
struct ResamplePlan {
    std::size_t scale = 4;
    ResampleDirection direction = ResampleDirection::up;
    double a = kKeysA;

    RasterVolume apply(const RasterVolume& img) const;
};

/// (W*s) x (H*s) output; separable cubic pass along X then Y, per band.
RasterVolume upsample_bicubic(const RasterVolume& img, std::size_t scale, double a = kKeysA);

/// (W/s) x (H/s) output with the kernel stretched by s (anti-aliased) and the
/// taps of each output pixel renormalized to sum to 1.
RasterVolume downsample_bicubic(const RasterVolume& img, std::size_t scale, double a = kKeysA);

struct WaldTriple {
    RasterVolume ms_lr;
    RasterVolume pan;
    RasterVolume ms_hr;
};

/// Reduced-resolution training triple: MS degraded by `scale`, PAN kept,
/// original MS as ground truth.
WaldTriple wald_degrade(const RasterVolume& ms_hr, const RasterVolume& pan_hr, std::size_t scale);

}  // namespace pansharp
