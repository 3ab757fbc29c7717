#include "pansharp/raster.hpp"

#include <algorithm>
#include <string>

#include "pansharp/errors.hpp"

namespace pansharp {

RasterVolume::RasterVolume(std::size_t w, std::size_t h, std::size_t l, float fill)
    : width(w), height(h), bands(l), pixels(w * h * l, fill) {
    if (w == 0 || h == 0 || l == 0) {
        throw DimensionError("raster extents must be positive, got " + std::to_string(w) + "x" + std::to_string(h) +
                             "x" + std::to_string(l));
    }
}

RasterVolume::RasterVolume(std::size_t w, std::size_t h, std::size_t l, std::vector<float> data)
    : RasterVolume(w, h, l) {
    if (data.size() != pixels.size()) {
        throw DimensionError("raster payload has " + std::to_string(data.size()) + " values, expected " +
                             std::to_string(pixels.size()));
    }
    pixels = std::move(data);
}

std::span<float> RasterVolume::band(std::size_t l) {
    if (l >= bands) throw DimensionError("band " + std::to_string(l) + " out of range (bands=" + std::to_string(bands) + ")");
    return std::span<float>(pixels).subspan(l * plane_size(), plane_size());
}

std::span<const float> RasterVolume::band(std::size_t l) const {
    if (l >= bands) throw DimensionError("band " + std::to_string(l) + " out of range (bands=" + std::to_string(bands) + ")");
    return std::span<const float>(pixels).subspan(l * plane_size(), plane_size());
}

RasterVolume RasterVolume::band_volume(std::size_t l) const {
    auto b = band(l);
    return RasterVolume(width, height, 1, std::vector<float>(b.begin(), b.end()));
}

RasterVolume RasterVolume::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
    if (x + w > width || y + h > height) {
        throw DimensionError("crop " + std::to_string(w) + "x" + std::to_string(h) + " at (" + std::to_string(x) +
                             "," + std::to_string(y) + ") exceeds " + std::to_string(width) + "x" +
                             std::to_string(height));
    }
    RasterVolume out(w, h, bands);
    for (std::size_t l = 0; l < bands; ++l) {
        for (std::size_t r = 0; r < h; ++r) {
            const float* src = pixels.data() + l * plane_size() + (y + r) * width + x;
            std::copy_n(src, w, out.pixels.data() + l * out.plane_size() + r * w);
        }
    }
    return out;
}

Tensor RasterVolume::to_tensor() const { return Tensor(Shape{bands, height, width}, pixels); }

RasterVolume RasterVolume::from_tensor(const Tensor& t) {
    if (t.rank() != 3) {
        throw DimensionError("raster from tensor needs rank 3 [L,H,W], got " + shape_string(t.shape()));
    }
    return RasterVolume(t.dim(2), t.dim(1), t.dim(0), t.vector());
}

std::size_t RasterVolume::clamp_unit() {
    std::size_t moved = 0;
    for (float& v : pixels) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        if (c != v) {
            v = c;
            ++moved;
        }
    }
    return moved;
}

RasterVolume stack_bands(const std::vector<RasterVolume>& single_bands) {
    if (single_bands.empty()) throw DimensionError("stack_bands: no bands");
    const auto& first = single_bands.front();
    RasterVolume out(first.width, first.height, single_bands.size());
    for (std::size_t l = 0; l < single_bands.size(); ++l) {
        const auto& b = single_bands[l];
        if (b.bands != 1 || b.width != first.width || b.height != first.height) {
            throw DimensionError("stack_bands: band " + std::to_string(l) + " is " + std::to_string(b.width) + "x" +
                                 std::to_string(b.height) + "x" + std::to_string(b.bands) + ", expected " +
                                 std::to_string(first.width) + "x" + std::to_string(first.height) + "x1");
        }
        std::copy(b.pixels.begin(), b.pixels.end(), out.band(l).begin());
    }
    return out;
}

}  // namespace pansharp
