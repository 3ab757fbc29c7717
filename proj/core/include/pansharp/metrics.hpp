#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pansharp/raster.hpp"

namespace pansharp {

// All metrics assume data normalized to [0,1] (peak 1.0).

/// Mean over bands of 10*log10(1/MSE_band); +inf if any band matches exactly.
double psnr(const RasterVolume& pred, const RasterVolume& gt);
std::vector<double> psnr_per_band(const RasterVolume& pred, const RasterVolume& gt);

struct SsimParams {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Gaussian-window SSIM over every fully contained window position, mean over bands.
double ssim(const RasterVolume& pred, const RasterVolume& gt, const SsimParams& params = {});
std::vector<double> ssim_per_band(const RasterVolume& pred, const RasterVolume& gt, const SsimParams& params = {});

/// Pearson correlation per band, averaged. A constant GT band scores 1 when the
/// prediction equals it exactly and 0 otherwise; a constant prediction of a
/// varying band scores 0.
double cc(const RasterVolume& pred, const RasterVolume& gt);
std::vector<double> cc_per_band(const RasterVolume& pred, const RasterVolume& gt);

/// Mean spectral angle in radians. Pixels where either vector has norm below
/// 1e-12 contribute 0.
double sam(const RasterVolume& pred, const RasterVolume& gt);

/// 100/s * sqrt(mean_l (RMSE_l / mean(gt_l))^2).
double ergas(const RasterVolume& pred, const RasterVolume& gt, std::size_t scale);

struct MetricsReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double cc = 0.0;
    double sam_rad = 0.0;
    double ergas = 0.0;
    double time_s = 0.0;
    std::vector<double> psnr_db_bands;
    std::vector<double> ssim_bands;
    std::vector<double> cc_bands;

    /// key=value lines: psnr_db, ssim, cc, sam_rad, ergas, time_s, then per-band
    /// psnr_db_b<i>, ssim_b<i>, cc_b<i>.
    std::string to_text() const;
    static MetricsReport parse(const std::string& text);

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport evaluate(const RasterVolume& pred, const RasterVolume& gt, std::size_t scale, double time_s = 0.0);

}  // namespace pansharp
