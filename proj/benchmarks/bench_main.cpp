#include <benchmark/benchmark.h>

#include "pansharp/autodiff.hpp"
#include "pansharp/fusion.hpp"
#include "pansharp/metrics.hpp"
#include "pansharp/resample.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/synthetic.hpp"
#include "pansharp/texture.hpp"

using namespace pansharp;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(shape);
    for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

void conv3d_forward(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto x = Var<float>::constant(random_tensor(Shape{c, 8, 32, 32}, 1));
    const auto k = Var<float>::constant(random_tensor(Shape{c, c, 3, 3, 3}, 2));
    const auto b = Var<float>::constant(random_tensor(Shape{c}, 3));
    for (auto _ : state) benchmark::DoNotOptimize(conv3d(x, k, b, Padding::zero).value().data().data());
}
BENCHMARK(conv3d_forward)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void conv3d_backward(benchmark::State& state) {
    const auto x = Var<float>::parameter(random_tensor(Shape{8, 8, 32, 32}, 1));
    const auto k = Var<float>::parameter(random_tensor(Shape{8, 8, 3, 3, 3}, 2));
    const auto b = Var<float>::parameter(random_tensor(Shape{8}, 3));
    for (auto _ : state) {
        backward(sum(conv3d(x, k, b, Padding::zero)));
        benchmark::DoNotOptimize(k.grad().data().data());
    }
}
BENCHMARK(conv3d_backward)->Unit(benchmark::kMillisecond);

void conv2d_forward(benchmark::State& state) {
    const auto x = Var<float>::constant(random_tensor(Shape{16, 64, 64}, 4));
    const auto k = Var<float>::constant(random_tensor(Shape{16, 16, 3, 3}, 5));
    const auto b = Var<float>::constant(random_tensor(Shape{16}, 6));
    for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k, b, Padding::zero).value().data().data());
}
BENCHMARK(conv2d_forward)->Unit(benchmark::kMillisecond);

void patch_relevance_forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto q = Var<float>::constant(random_tensor(Shape{16, n, n}, 7));
    const auto k = Var<float>::constant(random_tensor(Shape{16, n, n}, 8));
    for (auto _ : state) benchmark::DoNotOptimize(patch_relevance(q, k, 3).value().data().data());
}
BENCHMARK(patch_relevance_forward)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void ssim_metric(benchmark::State& state) {
    const SyntheticScene a = synthetic_scene(128, 128, 4, 1), b = synthetic_scene(128, 128, 4, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a.ms, b.ms));
}
BENCHMARK(ssim_metric)->Unit(benchmark::kMillisecond);

void bicubic_up(benchmark::State& state) {
    const SyntheticScene s = synthetic_scene(64, 64, 8, 3);
    for (auto _ : state) benchmark::DoNotOptimize(upsample_bicubic(s.ms, 4).pixels.data());
}
BENCHMARK(bicubic_up)->Unit(benchmark::kMillisecond);

void bicubic_down(benchmark::State& state) {
    const SyntheticScene s = synthetic_scene(256, 256, 8, 4);
    for (auto _ : state) benchmark::DoNotOptimize(downsample_bicubic(s.ms, 4).pixels.data());
}
BENCHMARK(bicubic_down)->Unit(benchmark::kMillisecond);

void texture_band(benchmark::State& state) {
    TextureTransformer<float> tt{TextureConfig{}};
    tt.randomize_zero_layers(1);
    const SyntheticScene s = synthetic_scene(32, 32, 1, 5);
    const RasterVolume lr_up = upsample_bicubic(downsample_bicubic(s.ms, 4), 4);
    for (auto _ : state) benchmark::DoNotOptimize(texture_transfer_band(tt, s.ms, lr_up, s.pan, 4).pixels.data());
}
BENCHMARK(texture_band)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
