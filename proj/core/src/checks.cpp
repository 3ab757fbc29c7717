#include "pansharp/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pansharp/errors.hpp"
#include "pansharp/fusion.hpp"
#include "pansharp/metrics.hpp"
#include "pansharp/reference.hpp"
#include "pansharp/resample.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/texture.hpp"

namespace pansharp {

namespace {

Tensor64 random_tensor(Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
    Tensor64 t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

RasterVolume random_volume(std::size_t w, std::size_t h, std::size_t l, Rng& rng, double lo = 0.0, double hi = 1.0) {
    RasterVolume v(w, h, l);
    for (auto& p : v.pixels) p = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

void randomize_biases(ParameterList<double>& params, Rng& rng) {
    for (auto& [name, p] : params) {
        if (name.ends_with(".bias")) {
            for (auto& v : p.mutable_value().data()) v = rng.uniform(-0.1, 0.1);
        }
    }
}

std::string format(double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

// Finite differences only mean something away from kinks (relu at 0, L1 at a
// zero residual, argmax ties), so inputs are redrawn until the evaluated graph
// keeps a clear distance from all of them.
constexpr double kKinkMargin = 2e-3;
constexpr int kMaxDraws = 500;

template <class Draw, class Loss>
void draw_smooth_point(Draw&& draw, Loss&& loss, const char* what) {
    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
        draw();
        KinkProbe probe;
        NoGradGuard no_grad;
        loss();
        if (probe.distance() >= kKinkMargin) return;
    }
    throw ContractError(std::string(what) + ": no evaluation point clear of kinks");
}

}  // namespace

GradCheckReport fusion_gradient_check(std::uint64_t seed, const GradCheckOptions& options) {
    Rng rng(seed);
    FusionConfig cfg;
    cfg.channels = 2;
    cfg.blocks = 1;
    cfg.seed = seed;
    FusionNet<double> net(3, cfg, false);
    auto params = net.parameters();
    randomize_biases(params, rng);
    Var<double> ms_up, pan, target;
    auto loss = [&] { return l1_loss(net.forward(ms_up, pan), target); };
    draw_smooth_point(
        [&] {
            ms_up = Var<double>::constant(random_tensor({3, 4, 4}, rng));
            pan = Var<double>::constant(random_tensor({1, 4, 4}, rng));
            target = Var<double>::constant(random_tensor({3, 4, 4}, rng));
        },
        loss, "fusion gradient check");
    return grad_check(params, loss, options);
}

GradCheckReport texture_gradient_check(std::uint64_t seed, const GradCheckOptions& options) {
    Rng rng(seed);
    TextureConfig cfg;
    cfg.channels = 3;
    cfg.seed = seed;
    TextureTransformer<double> tt(cfg);
    tt.randomize_zero_layers(seed + 1);
    auto params = tt.parameters();
    randomize_biases(params, rng);
    const std::size_t n = 4;
    Var<double> sr, lr_up, pan_du, pan, gt0, gt1;
    auto loss = [&] {
        auto out = tt.refine(sr, lr_up, pan_du, pan);
        return add(l1_loss(out[0], gt0), l1_loss(out[1], gt1));
    };
    draw_smooth_point(
        [&] {
            sr = Var<double>::constant(random_tensor({2, n, n}, rng));
            lr_up = Var<double>::constant(random_tensor({2, n, n}, rng));
            pan_du = Var<double>::constant(random_tensor({1, n, n}, rng));
            pan = Var<double>::constant(random_tensor({1, n, n}, rng));
            gt0 = Var<double>::constant(random_tensor({1, n, n}, rng));
            gt1 = Var<double>::constant(random_tensor({1, n, n}, rng));
        },
        loss, "texture gradient check");
    return grad_check(params, loss, options);
}

CheckOutcome attention_self_reference(std::uint64_t seed) {
    CheckOutcome result{"attention self-reference seed " + std::to_string(seed), false, ""};
    Rng rng(seed);
    TextureConfig cfg;
    cfg.channels = 4;
    cfg.seed = seed;
    TextureTransformer<float> tt(cfg);
    const std::size_t n = 10;
    auto source = Var<float>::constant(random_tensor({1, n, n}, rng, 0.1, 0.9).cast<float>());
    auto reference = Var<float>::constant(random_tensor({1, n, n}, rng, 0.1, 0.9).cast<float>());
    NoGradGuard no_grad;
    auto q = tt.lte(source);
    auto att = tt.attend(q, q, tt.lte(reference));

    const auto r = att.relevance.value();
    const auto s = att.soft.value();
    const std::size_t nq = r.dim(0), nk = r.dim(1);
    std::size_t misses = 0, inconsistent = 0;
    double min_s = 1.0, max_abs_r = 0.0;
    for (std::size_t i = 0; i < nq; ++i) {
        if (att.hard[i] != i) ++misses;
        if (s[i] != r[i * nk + att.hard[i]]) ++inconsistent;
        min_s = std::min(min_s, double(s[i]));
        for (std::size_t j = 0; j < nk; ++j) max_abs_r = std::max(max_abs_r, std::abs(double(r[i * nk + j])));
    }
    result.passed = misses == 0 && inconsistent == 0 && min_s >= 1.0 - 1e-6 && max_abs_r <= 1.0 + 1e-5;
    result.detail = "identity misses " + std::to_string(misses) + ", min s " + std::to_string(min_s) +
                    ", max |r| " + std::to_string(max_abs_r) + ", s != r(i,h) " + std::to_string(inconsistent);
    return result;
}

CheckOutcome metric_oracles(std::uint64_t seed, std::size_t volumes, double tolerance) {
    Rng rng(seed);
    double worst[5] = {0, 0, 0, 0, 0};
    for (std::size_t v = 0; v < volumes; ++v) {
        const std::size_t w = 11 + rng.below(6), h = 11 + rng.below(6), l = 2 + rng.below(3);
        const auto gt = random_volume(w, h, l, rng, 0.05, 1.0);
        auto pred = gt;
        const double noise = rng.uniform(0.01, 0.2);
        for (auto& p : pred.pixels) p = std::clamp(p + static_cast<float>(rng.uniform(-noise, noise)), 0.0f, 1.0f);
        const double got[5] = {psnr(pred, gt), ssim(pred, gt), cc(pred, gt), sam(pred, gt), ergas(pred, gt, 4)};
        const double want[5] = {reference::psnr(pred, gt), reference::ssim(pred, gt), reference::cc(pred, gt),
                                reference::sam(pred, gt), reference::ergas(pred, gt, 4)};
        for (int m = 0; m < 5; ++m) worst[m] = std::max(worst[m], std::abs(got[m] - want[m]));
    }
    CheckOutcome result{"metric oracles", true, ""};
    const char* names[5] = {"psnr", "ssim", "cc", "sam", "ergas"};
    for (int m = 0; m < 5; ++m) {
        result.passed = result.passed && worst[m] <= tolerance;
        result.detail += std::string(m ? ", " : "") + names[m] + " " + format(worst[m]);
    }
    return result;
}

CheckOutcome resample_oracles(std::uint64_t seed, double tolerance) {
    Rng rng(seed);
    const auto small = random_volume(6, 6, 2, rng);
    const auto large = random_volume(16, 16, 2, rng);
    double up = 0.0, down = 0.0;
    const auto u = upsample_bicubic(small, 4), ur = reference::upsample(small, 4);
    const auto d = downsample_bicubic(large, 4), dr = reference::downsample(large, 4);
    for (std::size_t i = 0; i < u.pixels.size(); ++i) up = std::max(up, double(std::abs(u.pixels[i] - ur.pixels[i])));
    for (std::size_t i = 0; i < d.pixels.size(); ++i) down = std::max(down, double(std::abs(d.pixels[i] - dr.pixels[i])));
    return {"resample oracles", up <= tolerance && down <= tolerance, "up " + format(up) + ", down " + format(down)};
}

std::vector<CheckOutcome> run_selfcheck(std::size_t seeds) {
    std::vector<CheckOutcome> out;
    for (std::size_t s = 1; s <= seeds; ++s) {
        const auto f = fusion_gradient_check(s);
        double worst = 0.0;
        for (const auto& b : f.blocks) worst = std::max(worst, b.max_rel_error);
        out.push_back({"fusion gradients seed " + std::to_string(s), f.passed, "max rel " + format(worst)});
        const auto t = texture_gradient_check(s);
        worst = 0.0;
        for (const auto& b : t.blocks) worst = std::max(worst, b.max_rel_error);
        out.push_back({"texture gradients seed " + std::to_string(s), t.passed, "max rel " + format(worst)});
        out.push_back(attention_self_reference(s));
    }
    out.push_back(metric_oracles(1, 50));
    out.push_back(resample_oracles(1));
    return out;
}

}  // namespace pansharp
