#include "pansharp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pansharp/errors.hpp"
#include "pansharp/resample.hpp"
#include "pansharp/rng.hpp"

namespace pansharp {

namespace {

struct Wave {
    double kx, ky, phase, amplitude;
};

Wave random_wave(Rng& rng, double min_period, double max_period, double amplitude) {
    const double period = rng.uniform(min_period, max_period);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / period;
    return {k * std::cos(angle), k * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi), amplitude};
}

double eval(const std::vector<Wave>& waves, double x, double y) {
    double v = 0.0;
    for (const auto& w : waves) v += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
    return v;
}

// Shared high-frequency structure in roughly [-1, 1].
std::vector<double> detail_field(std::size_t width, std::size_t height, Rng& rng) {
    std::vector<Wave> waves;
    for (int i = 0; i < 3; ++i) waves.push_back(random_wave(rng, 3.0, 10.0, 0.25));
    std::vector<double> field(width * height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) field[y * width + x] = eval(waves, double(x), double(y));
    }
    const double w = double(width), h = double(height);
    const int shapes = 4 + static_cast<int>(rng.below(4));
    for (int s = 0; s < shapes; ++s) {
        const double level = rng.uniform(-0.5, 0.5);
        const double cx = rng.uniform(0.0, w), cy = rng.uniform(0.0, h);
        const double ex = rng.uniform(0.08, 0.3) * w, ey = rng.uniform(0.08, 0.3) * h;
        const bool disk = rng.below(2) == 0;
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double dx = (double(x) - cx) / ex, dy = (double(y) - cy) / ey;
                const bool inside = disk ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (inside) field[y * width + x] += level;
            }
        }
    }
    return field;
}

}  // namespace

SyntheticScene synthetic_scene(std::size_t width, std::size_t height, std::size_t bands, std::uint64_t seed) {
    if (width == 0 || height == 0 || bands == 0) throw ContractError("synthetic scene: empty geometry");
    Rng rng(seed);
    const std::vector<double> detail = detail_field(width, height, rng);
    const double span = double(std::max(width, height));

    SyntheticScene scene{RasterVolume(width, height, bands), RasterVolume(width, height, 1)};
    std::vector<double> weights(bands);
    double weight_sum = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
        weights[b] = rng.uniform(0.5, 1.5);
        weight_sum += weights[b];
        const double base = rng.uniform(0.35, 0.6);
        const double gain = rng.uniform(0.12, 0.22);
        std::vector<Wave> smooth;
        for (int i = 0; i < 2; ++i) smooth.push_back(random_wave(rng, span, 3.0 * span, 0.06));
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double v = base + eval(smooth, double(x), double(y)) + gain * detail[y * width + x];
                scene.ms.at(b, y, x) = static_cast<float>(std::clamp(v, 0.05, 0.95));
            }
        }
    }
    for (std::size_t i = 0; i < scene.pan.pixels.size(); ++i) {
        double v = 0.0;
        for (std::size_t b = 0; b < bands; ++b) v += weights[b] * scene.ms.pixels[b * scene.ms.plane_size() + i];
        scene.pan.pixels[i] = static_cast<float>(v / weight_sum);
    }
    return scene;
}

std::vector<PatchPair> synthetic_pairs(std::size_t count, std::size_t lr_size, std::size_t bands, std::size_t scale,
                                       std::uint64_t seed, Split split) {
    std::vector<PatchPair> pairs;
    Rng seeds(seed);
    const std::size_t hr = lr_size * scale;
    for (std::size_t i = 0; i < count; ++i) {
        const auto scene = synthetic_scene(hr, hr, bands, seeds.next());
        auto triple = wald_degrade(scene.ms, scene.pan, scale);
        PatchPair p{std::move(triple.ms_lr), std::move(triple.pan), std::move(triple.ms_hr), {}, split};
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace pansharp
