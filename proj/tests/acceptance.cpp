// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pansharp/checks.hpp"
#include "pansharp/dataset.hpp"
#include "pansharp/errors.hpp"
#include "pansharp/fusion.hpp"
#include "pansharp/io.hpp"
#include "pansharp/metrics.hpp"
#include "pansharp/resample.hpp"
#include "pansharp/synthetic.hpp"
#include "pansharp/texture.hpp"

using namespace pansharp;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a);
    return buf;
}

double mean_abs_error(const RasterVolume& a, const RasterVolume& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) total += std::abs(double(a.pixels[i]) - double(b.pixels[i]));
    return total / double(a.pixels.size());
}

RasterVolume clamped_bicubic(const RasterVolume& ms, std::size_t scale) {
    RasterVolume up = upsample_bicubic(ms, scale);
    up.clamp_unit();
    return up;
}

template <class Error, class F>
bool throws(F&& f) {
    try {
        f();
    } catch (const Error&) {
        return true;
    } catch (...) {
        return false;
    }
    return false;
}

// Criterion 1
Verdict gradient_suite() {
    const auto start = Clock::now();
    bool ok = true;
    double worst = 0.0;
    std::size_t blocks = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (const GradCheckReport& r : {fusion_gradient_check(seed), texture_gradient_check(seed)}) {
            ok = ok && r.passed;
            for (const auto& b : r.blocks) {
                worst = std::max(worst, b.max_rel_error);
                ++blocks;
            }
        }
    }
    const double elapsed = seconds_since(start);
    ok = ok && elapsed < 120.0;
    return {ok, std::to_string(blocks) + " blocks over 5 seeds, worst rel " + fmt("%.2e", worst) + ", " +
                    fmt("%.1f s", elapsed)};
}

// Criterion 2
Verdict attention_invariants() {
    std::size_t passed = 0;
    std::string first_failure;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const CheckOutcome o = attention_self_reference(seed);
        if (o.passed)
            ++passed;
        else if (first_failure.empty())
            first_failure = o.detail;
    }
    return {passed == 20, std::to_string(passed) + "/20 seeds" + (first_failure.empty() ? "" : ": " + first_failure)};
}

// Criterion 3
Verdict metric_criterion() {
    const CheckOutcome oracles = metric_oracles(7, 50);
    SyntheticScene scene = synthetic_scene(32, 32, 4, 3);
    const MetricsReport ideal = evaluate(scene.ms, scene.ms, 4);
    const bool ideal_ok = std::isinf(ideal.psnr_db) && ideal.psnr_db > 0 && std::abs(ideal.ssim - 1.0) <= 1e-12 &&
                          std::abs(ideal.cc - 1.0) <= 1e-12 && ideal.sam_rad == 0.0 && ideal.ergas == 0.0;
    return {oracles.passed && ideal_ok,
            oracles.detail + "; identity (" + fmt("%g", ideal.psnr_db) + ", " + fmt("%.12g", ideal.ssim) + ", " +
                fmt("%.12g", ideal.cc) + ", " + fmt("%g", ideal.sam_rad) + ", " + fmt("%g", ideal.ergas) + ")"};
}

// Criterion 4
Verdict identity_starts() {
    Rng rng(11);
    auto bounded = [&](std::size_t w, std::size_t h, std::size_t l) {
        RasterVolume v(w, h, l);
        for (auto& p : v.pixels) p = static_cast<float>(rng.uniform(0.1, 0.9));
        return v;
    };
    const RasterVolume ms = bounded(8, 8, 4), pan = bounded(32, 32, 1);
    const FusionNet<float> fusion(4, FusionConfig{});
    const bool step1 = fusion_forward(fusion, ms, pan) == clamped_bicubic(ms, 4);

    const RasterVolume sr = bounded(32, 32, 4), lr_up = bounded(32, 32, 4);
    const TextureTransformer<float> texture{TextureConfig{}};
    const bool step2 = texture_transfer(texture, sr, lr_up, pan, 4) == sr;
    return {step1 && step2, std::string("step 1 ") + (step1 ? "== bicubic" : "!= bicubic") + ", step 2 " +
                                (step2 ? "== input" : "!= input")};
}

// Criterion 5
std::vector<PatchPair> overfit_pairs() {
    auto pairs = synthetic_pairs(4, 8, 4, 4, 2024, Split::train);
    const std::size_t n = pairs.size();
    for (std::size_t i = 0; i < n; ++i) {
        PatchPair v = pairs[i];
        v.split = Split::val;
        pairs.push_back(std::move(v));
    }
    return pairs;
}

FusionConfig overfit_fusion_config() {
    FusionConfig c;
    c.channels = 8;
    c.blocks = 2;
    c.learning_rate = 2e-3;
    c.batch_size = 1;
    c.patience = 500;
    c.max_epochs = 500;
    c.seed = 1;
    return c;
}

TextureConfig overfit_texture_config() {
    TextureConfig c;
    c.channels = 8;
    c.learning_rate = 1e-3;
    c.batch_size = 1;
    c.patience = 500;
    c.max_epochs = 500;
    c.seed = 1;
    return c;
}

Verdict overfit_runs() {
    const auto pairs = overfit_pairs();
    const auto train = select_split(pairs, Split::train);

    auto start = Clock::now();
    const auto fused = train_fusion(pairs, overfit_fusion_config());
    const double fusion_time = seconds_since(start);
    double bicubic_l1 = 0.0, fused_l1 = 0.0;
    for (const auto& p : train) {
        bicubic_l1 += mean_abs_error(clamped_bicubic(p.ms, 4), p.gt);
        fused_l1 += mean_abs_error(fusion_forward(fused.net, p.ms, p.pan), p.gt);
    }
    const double fusion_ratio = fused_l1 / bicubic_l1;
    const bool fusion_repeat = encode_weights(train_fusion(pairs, overfit_fusion_config()).weights) ==
                               encode_weights(fused.weights);

    const auto frozen_before = encode_weights(fused.net.to_weights());
    start = Clock::now();
    const auto textured = train_texture(pairs, fused.net, overfit_texture_config());
    const double texture_time = seconds_since(start);
    const bool frozen = encode_weights(fused.net.to_weights()) == frozen_before;
    double step1_l1 = 0.0, step2_l1 = 0.0;
    for (const auto& p : train) {
        const RasterVolume sr = fusion_forward(fused.net, p.ms, p.pan);
        RasterVolume refined = texture_transfer(textured.net, sr, clamped_bicubic(p.ms, 4), p.pan, 4);
        refined.clamp_unit();
        step1_l1 += mean_abs_error(sr, p.gt);
        step2_l1 += mean_abs_error(refined, p.gt);
    }
    const double texture_ratio = step2_l1 / step1_l1;
    const bool texture_repeat = encode_weights(train_texture(pairs, fused.net, overfit_texture_config()).weights) ==
                                encode_weights(textured.weights);

    const bool fusion_ok = fusion_ratio <= 0.1 && fusion_time < 300.0 && fusion_repeat;
    const bool texture_ok = texture_ratio <= 0.1 && texture_time < 300.0 && texture_repeat && frozen;
    std::ostringstream detail;
    detail << "step 1 L1 " << fmt("%.4f", fused_l1 / 4) << " of bicubic " << fmt("%.4f", bicubic_l1 / 4) << " (ratio "
           << fmt("%.3f", fusion_ratio) << ", " << fused.log.epochs.size() << " epochs, " << fmt("%.0f s", fusion_time)
           << (fusion_repeat ? ", repeatable" : ", NOT repeatable") << ")"
           << (fusion_ok ? "" : " [fails]") << "; step 2 L1 " << fmt("%.4f", step2_l1 / 4) << " of step 1 "
           << fmt("%.4f", step1_l1 / 4) << " (ratio " << fmt("%.3f", texture_ratio) << ", "
           << textured.log.epochs.size() << " epochs, " << fmt("%.0f s", texture_time)
           << (texture_repeat ? ", repeatable" : ", NOT repeatable") << (frozen ? ", fusion unchanged" : ", FUSION CHANGED")
           << ")" << (texture_ok ? "" : " [fails: needs ratio <= 0.100]");
    return {fusion_ok && texture_ok, detail.str()};
}

// Criterion 6
std::vector<PatchPair> scene_patches(std::uint64_t seed, Split split) {
    const SyntheticScene scene = synthetic_scene(128, 128, 4, seed);
    const WaldTriple t = wald_degrade(scene.ms, scene.pan, 4);
    PatchSampling sampling;
    sampling.size = 8;
    sampling.stride = 8;
    auto pairs = extract_patches(t.ms_lr, t.pan, t.ms_hr, sampling);
    for (auto& p : pairs) p.split = split;
    return pairs;
}

FusionConfig pipeline_fusion_config() {
    FusionConfig c = overfit_fusion_config();
    c.patience = 30;
    c.max_epochs = 200;
    return c;
}

TextureConfig pipeline_texture_config() {
    TextureConfig c = overfit_texture_config();
    c.patience = 10;
    c.max_epochs = 60;
    return c;
}

Verdict pipeline_ordering() {
    // Validation patches come from their own scene so early stopping tracks
    // generalisation to unseen scenes, which is what the held-out check measures.
    auto pairs = scene_patches(101, Split::train);
    const auto val = scene_patches(103, Split::val);
    pairs.insert(pairs.end(), val.begin(), val.end());
    const auto fused = train_fusion(pairs, pipeline_fusion_config());
    const auto textured = train_texture(pairs, fused.net, pipeline_texture_config());

    const SyntheticScene held_out = synthetic_scene(64, 64, 4, 202);
    const WaldTriple t = wald_degrade(held_out.ms, held_out.pan, 4);
    const MetricsReport bicubic = evaluate(clamped_bicubic(t.ms_lr, 4), t.ms_hr, 4);
    const MetricsReport step1 = evaluate(pansharpen(fused.net, nullptr, t.ms_lr, t.pan), t.ms_hr, 4);
    const MetricsReport step2 = evaluate(pansharpen(fused.net, &textured.net, t.ms_lr, t.pan), t.ms_hr, 4);

    const bool ok = bicubic.psnr_db < step1.psnr_db && step2.ergas <= step1.ergas;
    std::ostringstream detail;
    detail << "PSNR bicubic " << fmt("%.2f", bicubic.psnr_db) << " / step 1 " << fmt("%.2f", step1.psnr_db)
           << " / step 2 " << fmt("%.2f", step2.psnr_db) << " dB; ERGAS " << fmt("%.3f", bicubic.ergas) << " / "
           << fmt("%.3f", step1.ergas) << " / " << fmt("%.3f", step2.ergas);
    return {ok, detail.str()};
}

// Criterion 7
RasterVolume ramp(std::size_t w, std::size_t h, double ax, double ay, double c) {
    RasterVolume v(w, h, 1);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) v.at(0, y, x) = static_cast<float>(c + ax * double(x) + ay * double(y));
    return v;
}

Verdict resampling() {
    const std::size_t s = 4;
    const RasterVolume up = upsample_bicubic(ramp(12, 10, 0.03, -0.02, 0.5), s);
    double up_err = 0.0;
    for (std::size_t y = 2 * s; y < up.height - 2 * s; ++y)
        for (std::size_t x = 2 * s; x < up.width - 2 * s; ++x) {
            const double sx = (double(x) + 0.5) / double(s) - 0.5, sy = (double(y) + 0.5) / double(s) - 0.5;
            up_err = std::max(up_err, std::abs(double(up.at(0, y, x)) - (0.5 + 0.03 * sx - 0.02 * sy)));
        }

    const RasterVolume down = downsample_bicubic(ramp(48, 40, 0.01, 0.015, 0.1), s);
    double down_err = 0.0;
    for (std::size_t y = 2; y < down.height - 2; ++y)
        for (std::size_t x = 2; x < down.width - 2; ++x) {
            const double sx = (double(x) + 0.5) * double(s) - 0.5, sy = (double(y) + 0.5) * double(s) - 0.5;
            down_err = std::max(down_err, std::abs(double(down.at(0, y, x)) - (0.1 + 0.01 * sx + 0.015 * sy)));
        }

    double unity_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double t = double(i) / 1000.0;
        double total = 0.0;
        for (int k = -3; k <= 3; ++k) total += cubic_kernel(t - k);
        unity_err = std::max(unity_err, std::abs(total - 1.0));
    }
    return {up_err <= 1e-6 && down_err <= 1e-6 && unity_err <= 1e-12,
            "ramp up " + fmt("%.2e", up_err) + ", ramp down " + fmt("%.2e", down_err) + ", unity " +
                fmt("%.2e", unity_err)};
}

// Criterion 8
Verdict format_round_trips() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "pansharp_acceptance_formats";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const RasterVolume raster = synthetic_scene(24, 16, 3, 8).ms;
    write_raster(raster, dir / "a.msrv");
    const auto raster_bytes = read_file_bytes(dir / "a.msrv");
    write_raster(read_raster(dir / "a.msrv"), dir / "b.msrv");
    const bool raster_ok = raster_bytes == encode_raster(raster) && read_file_bytes(dir / "b.msrv") == raster_bytes;

    FusionConfig fc;
    fc.channels = 3;
    fc.blocks = 1;
    const WeightsFile weights = FusionNet<float>(3, fc, false).to_weights();
    write_weights(weights, dir / "a.pshw");
    const auto weight_bytes = read_file_bytes(dir / "a.pshw");
    write_weights(read_weights(dir / "a.pshw"), dir / "b.pshw");
    const bool weights_ok = read_weights(dir / "a.pshw") == weights && read_file_bytes(dir / "b.pshw") == weight_bytes;

    std::size_t cases = 0, correct = 0;
    auto expect = [&](bool ok) {
        ++cases;
        correct += ok ? 1 : 0;
    };
    auto corrupt = [&](const std::vector<std::uint8_t>& good, auto decode) {
        auto bad_magic = good;
        bad_magic[0] = 'X';
        expect(throws<BadMagicError>([&] { decode(bad_magic); }));
        auto bad_version = good;
        bad_version[4] = 0x09;
        expect(throws<UnknownVersionError>([&] { decode(bad_version); }));
        expect(throws<TruncatedError>([&] { decode(std::vector<std::uint8_t>(good.begin(), good.begin() + 7)); }));
        expect(throws<TruncatedError>([&] { decode(std::vector<std::uint8_t>(good.begin(), good.end() - 3)); }));
        expect(throws<TruncatedError>([&] { decode({}); }));
    };
    corrupt(raster_bytes, [](const std::vector<std::uint8_t>& b) { decode_raster(b); });
    corrupt(weight_bytes, [](const std::vector<std::uint8_t>& b) { decode_weights(b); });
    fs::remove_all(dir);
    return {raster_ok && weights_ok && correct == cases,
            std::string("MSRV ") + (raster_ok ? "identical" : "differs") + ", PSHW " +
                (weights_ok ? "identical" : "differs") + ", " + std::to_string(correct) + "/" +
                std::to_string(cases) + " corruptions raise their error"};
}

// Criterion 9
Verdict determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "pansharp_acceptance_determinism";
    fs::remove_all(root);

    auto pairs = synthetic_pairs(3, 4, 3, 4, 77, Split::train);
    auto val = synthetic_pairs(2, 4, 3, 4, 78, Split::val);
    pairs.insert(pairs.end(), val.begin(), val.end());
    FusionConfig fc;
    fc.channels = 4;
    fc.blocks = 1;
    fc.batch_size = 2;
    fc.learning_rate = 2e-3;
    fc.max_epochs = 4;
    TextureConfig tc;
    tc.channels = 4;
    tc.batch_size = 2;
    tc.max_epochs = 3;
    const SyntheticScene scene = synthetic_scene(32, 32, 3, 79);
    const WaldTriple t = wald_degrade(scene.ms, scene.pan, 4);

    const std::vector<std::string> files = {"fusion.pshw", "fusion.log", "texture.pshw", "texture.log",
                                            "step1.msrv",  "full.msrv"};
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        fs::create_directories(dir);
        const auto fused = train_fusion(pairs, fc);
        const auto textured = train_texture(pairs, fused.net, tc);
        write_weights(fused.weights, dir / "fusion.pshw");
        write_weights(textured.weights, dir / "texture.pshw");
        std::string log = fused.log.to_text();
        write_file_bytes({log.begin(), log.end()}, dir / "fusion.log");
        log = textured.log.to_text();
        write_file_bytes({log.begin(), log.end()}, dir / "texture.log");
        write_raster(pansharpen(fused.net, nullptr, t.ms_lr, t.pan), dir / "step1.msrv");
        write_raster(pansharpen(fused.net, &textured.net, t.ms_lr, t.pan), dir / "full.msrv");
    }
    std::size_t identical = 0;
    for (const auto& f : files)
        if (read_file_bytes(root / "a" / f) == read_file_bytes(root / "b" / f)) ++identical;
    fs::remove_all(root);
    return {identical == files.size(),
            std::to_string(identical) + "/" + std::to_string(files.size()) + " output files byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select criteria by number, e.g. `acceptance 5 6`.
    const std::vector<std::string> only(argv + 1, argv + argc);
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"1 gradient suite", gradient_suite},
        {"2 attention invariants", attention_invariants},
        {"3 metric oracles", metric_criterion},
        {"4 residual-identity starts", identity_starts},
        {"5 overfit runs", overfit_runs},
        {"6 pipeline ordering", pipeline_ordering},
        {"7 resampling", resampling},
        {"8 format round trips", format_round_trips},
        {"9 determinism", determinism},
    };
    std::size_t failed = 0, ran = 0;
    for (const auto& [name, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name.substr(0, name.find(' '))) == only.end())
            continue;
        ++ran;
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        if (!v.passed) ++failed;
        std::printf("%s  %s: %s\n", v.passed ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
