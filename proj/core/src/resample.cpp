#include "pansharp/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pansharp/errors.hpp"

namespace pansharp {

double cubic_kernel(double t, double a) {
    const double x = std::abs(t);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace {

struct Tap {
    std::size_t index;
    double weight;
};

using TapTable = std::vector<std::vector<Tap>>;

std::size_t clamp_index(long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(n) - 1));
}

TapTable upsample_taps(std::size_t n_in, std::size_t scale, double a) {
    TapTable table(n_in * scale);
    for (std::size_t o = 0; o < table.size(); ++o) {
        const double u = (static_cast<double>(o) + 0.5) / static_cast<double>(scale) - 0.5;
        const long base = static_cast<long>(std::floor(u));
        for (long j = base - 1; j <= base + 2; ++j) {
            table[o].push_back({clamp_index(j, n_in), cubic_kernel(u - static_cast<double>(j), a)});
        }
    }
    return table;
}

TapTable downsample_taps(std::size_t n_in, std::size_t scale, double a) {
    const double s = static_cast<double>(scale);
    TapTable table(n_in / scale);
    for (std::size_t o = 0; o < table.size(); ++o) {
        const double u = (static_cast<double>(o) + 0.5) * s - 0.5;
        const long lo = static_cast<long>(std::floor(u - 2.0 * s));
        const long hi = static_cast<long>(std::ceil(u + 2.0 * s));
        double total = 0.0;
        for (long j = lo; j <= hi; ++j) {
            const double w = cubic_kernel((u - static_cast<double>(j)) / s, a);
            if (w == 0.0) continue;
            table[o].push_back({clamp_index(j, n_in), w});
            total += w;
        }
        for (auto& t : table[o]) t.weight /= total;
    }
    return table;
}

RasterVolume separable(const RasterVolume& img, const TapTable& tx, const TapTable& ty) {
    const std::size_t out_w = tx.size();
    const std::size_t out_h = ty.size();
    RasterVolume out(out_w, out_h, img.bands);
    std::vector<double> rows(img.height * out_w);
    for (std::size_t l = 0; l < img.bands; ++l) {
        auto src = img.band(l);
        for (std::size_t y = 0; y < img.height; ++y) {
            const float* line = src.data() + y * img.width;
            for (std::size_t x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (const auto& t : tx[x]) acc += t.weight * static_cast<double>(line[t.index]);
                rows[y * out_w + x] = acc;
            }
        }
        auto dst = out.band(l);
        for (std::size_t y = 0; y < out_h; ++y) {
            for (std::size_t x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (const auto& t : ty[y]) acc += t.weight * rows[t.index * out_w + x];
                dst[y * out_w + x] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

void require_scale(std::size_t scale) {
    if (scale < 2) throw ContractError("resample: scale factor must be an integer >= 2, got " + std::to_string(scale));
}

}  // namespace

RasterVolume upsample_bicubic(const RasterVolume& img, std::size_t scale, double a) {
    require_scale(scale);
    if (img.empty()) throw DataError("upsample_bicubic: empty image");
    return separable(img, upsample_taps(img.width, scale, a), upsample_taps(img.height, scale, a));
}

RasterVolume downsample_bicubic(const RasterVolume& img, std::size_t scale, double a) {
    require_scale(scale);
    if (img.empty()) throw DataError("downsample_bicubic: empty image");
    if (img.width % scale != 0 || img.height % scale != 0) {
        const std::size_t pad_w = (scale - img.width % scale) % scale;
        const std::size_t pad_h = (scale - img.height % scale) % scale;
        throw ContractError("downsample_bicubic: " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                            " is not divisible by " + std::to_string(scale) + "; pad by " + std::to_string(pad_w) +
                            " columns and " + std::to_string(pad_h) + " rows");
    }
    return separable(img, downsample_taps(img.width, scale, a), downsample_taps(img.height, scale, a));
}

RasterVolume ResamplePlan::apply(const RasterVolume& img) const {
    return direction == ResampleDirection::up ? upsample_bicubic(img, scale, a) : downsample_bicubic(img, scale, a);
}

WaldTriple wald_degrade(const RasterVolume& ms_hr, const RasterVolume& pan_hr, std::size_t scale) {
    if (pan_hr.bands != 1) {
        throw DataError("wald_degrade: PAN must have exactly 1 band, got " + std::to_string(pan_hr.bands));
    }
    if (ms_hr.width != pan_hr.width || ms_hr.height != pan_hr.height) {
        throw DataError("wald_degrade: MS is " + std::to_string(ms_hr.width) + "x" + std::to_string(ms_hr.height) +
                        " but PAN is " + std::to_string(pan_hr.width) + "x" + std::to_string(pan_hr.height) +
                        "; co-registered HR inputs must match");
    }
    return {downsample_bicubic(ms_hr, scale), pan_hr, ms_hr};
}

}  // namespace pansharp
