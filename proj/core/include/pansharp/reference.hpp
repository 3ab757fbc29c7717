#pragma once

#include <cstddef>
#include <vector>

#include "pansharp/autodiff.hpp"
#include "pansharp/metrics.hpp"
#include "pansharp/raster.hpp"
#include "pansharp/tensor.hpp"

// Slow, literal implementations used as oracles by the tests and by
// `pansharp selfcheck`. They share no code with the production kernels.
namespace pansharp::reference {

Tensor64 conv2d(const Tensor64& input, const Tensor64& kernel, const Tensor64& bias, Padding padding);
Tensor64 conv3d(const Tensor64& input, const Tensor64& kernel, const Tensor64& bias, Padding padding);

/// 2D direct-tap resampling, one output pixel at a time.
RasterVolume upsample(const RasterVolume& img, std::size_t scale);
RasterVolume downsample(const RasterVolume& img, std::size_t scale);

Tensor64 unfold(const Tensor64& x, std::size_t patch);
Tensor64 fold(const Tensor64& patches, std::size_t channels, std::size_t height, std::size_t width,
              std::size_t patch);
Tensor64 relevance(const Tensor64& q, const Tensor64& k);
std::vector<std::size_t> argmax_rows(const Tensor64& m);
std::vector<double> max_rows(const Tensor64& m);

double psnr(const RasterVolume& pred, const RasterVolume& gt);
double ssim(const RasterVolume& pred, const RasterVolume& gt, const SsimParams& params = {});
double cc(const RasterVolume& pred, const RasterVolume& gt);
double sam(const RasterVolume& pred, const RasterVolume& gt);
double ergas(const RasterVolume& pred, const RasterVolume& gt, std::size_t scale);

}  // namespace pansharp::reference
