#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pansharp/tensor.hpp"

namespace pansharp {

/// W x H x L image cube, band-sequential, row-major within a band. PAN images
/// are single-band volumes.
struct RasterVolume {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t bands = 0;
    std::vector<float> pixels;

    RasterVolume() = default;
    RasterVolume(std::size_t w, std::size_t h, std::size_t l, float fill = 0.0f);
    RasterVolume(std::size_t w, std::size_t h, std::size_t l, std::vector<float> data);

    std::size_t plane_size() const noexcept { return width * height; }
    bool empty() const noexcept { return pixels.empty(); }

    float& at(std::size_t band, std::size_t y, std::size_t x) { return pixels[band * plane_size() + y * width + x]; }
    float at(std::size_t band, std::size_t y, std::size_t x) const {
        return pixels[band * plane_size() + y * width + x];
    }

    std::span<float> band(std::size_t l);
    std::span<const float> band(std::size_t l) const;
    RasterVolume band_volume(std::size_t l) const;

    /// Sub-volume [x, x+w) x [y, y+h), all bands.
    RasterVolume crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const;

    /// [L,H,W] tensor sharing the same memory order.
    Tensor to_tensor() const;
    static RasterVolume from_tensor(const Tensor& t);

    /// Clamps into [0,1]; returns how many values moved.
    std::size_t clamp_unit();

    friend bool operator==(const RasterVolume&, const RasterVolume&) = default;
};

RasterVolume stack_bands(const std::vector<RasterVolume>& single_bands);

}  // namespace pansharp
