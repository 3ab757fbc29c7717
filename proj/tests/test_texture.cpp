#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "pansharp/checks.hpp"
#include "pansharp/reference.hpp"
#include "pansharp/resample.hpp"
#include "pansharp/synthetic.hpp"
#include "pansharp/texture.hpp"
#include "support.hpp"

using namespace pansharp;
using testing::random_tensor;

namespace {

using V = Var<double>;

TextureConfig small_config(std::size_t channels = 4) {
    TextureConfig c;
    c.channels = channels;
    c.learning_rate = 1e-3;
    c.batch_size = 2;
    c.patience = 3;
    c.max_epochs = 5;
    c.seed = 3;
    return c;
}

Tensor64 to64(const Tensor& t) { return t.cast<double>(); }

}  // namespace

TEST_SUITE("texture extractor") {
    TEST_CASE("identical inputs give bitwise identical features") {
        Rng rng(81);
        const TextureTransformer<float> tt(small_config());
        const Tensor img = random_tensor<float>(Shape{1, 12, 10}, rng, 0, 1);
        CHECK(tt.lte(Var<float>::constant(img)).value() == tt.lte(Var<float>::constant(img)).value());
    }

    TEST_CASE("32x32 input with C=16 gives 16x32x32") {
        const TextureTransformer<float> tt(TextureConfig{});
        CHECK(tt.lte(Var<float>::constant(Tensor(Shape{1, 32, 32}, 0.5f))).shape() == Shape{16, 32, 32});
    }

    TEST_CASE("multi-band input is rejected") {
        const TextureTransformer<float> tt(small_config());
        CHECK_THROWS_AS(tt.lte(Var<float>::constant(Tensor(Shape{2, 8, 8}))), DimensionError);
    }

    TEST_CASE("gradient of the summed features matches finite differences") {
        TextureTransformer<double> tt(small_config(3));
        std::size_t checked = 0;
        for (std::uint64_t seed = 1; checked < 5 && seed < 50; ++seed) {
            Rng rng(seed);
            const V image = V::constant(random_tensor(Shape{1, 6, 6}, rng, 0, 1));
            {
                // Only evaluation points away from relu kinks are valid for finite differences.
                KinkProbe probe;
                tt.lte(image);
                if (probe.distance() < 2e-3) continue;
            }
            ParameterList<double> params;
            for (auto& p : tt.parameters())
                if (p.first.rfind("lte", 0) == 0) params.push_back(p);
            REQUIRE(params.size() == 4);
            const GradCheckReport report = grad_check(params, [&] { return sum(tt.lte(image)); });
            INFO(report.to_text());
            CHECK(report.passed);
            ++checked;
        }
        CHECK(checked == 5);
    }
}

TEST_SUITE("unfold and fold") {
    TEST_CASE("1x3x3 input: nine patches, the centre one is the input") {
        const Tensor64 x(Shape{1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
        const Tensor64 p = unfold(V::constant(x), 3).value();
        REQUIRE(p.shape() == Shape{9, 9});
        for (std::size_t j = 0; j < 9; ++j) CHECK(p[4 * 9 + j] == x[j]);
    }

    TEST_CASE("constant input gives identical patches") {
        const Tensor64 p = unfold(V::constant(Tensor64(Shape{2, 4, 5}, 0.3)), 3).value();
        for (double v : p.data()) CHECK(v == 0.3);
    }

    TEST_CASE("random 2x4x4 input matches the nested-loop oracle") {
        Rng rng(82);
        const Tensor64 x = random_tensor(Shape{2, 4, 4}, rng);
        CHECK(unfold(V::constant(x), 3).value() == reference::unfold(x, 3));
        CHECK(testing::sum_of(reference::unfold(x, 3)) == doctest::Approx(-5.1618854912077747).epsilon(1e-12));
    }

    TEST_CASE("fold of unfold restores the interior") {
        Rng rng(83);
        const Tensor64 x = random_tensor(Shape{3, 6, 7}, rng);
        const Tensor64 back = fold(unfold(V::constant(x), 3), 3, 6, 7, 3).value();
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 1; y < 5; ++y)
                for (std::size_t xx = 1; xx < 6; ++xx) {
                    const std::size_t i = (c * 6 + y) * 7 + xx;
                    CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-14));
                }
    }

    TEST_CASE("gather and fold match the explicit loop oracle") {
        Rng rng(84);
        const Tensor64 vfeat = random_tensor(Shape{2, 5, 4}, rng);
        const Tensor64 vp = reference::unfold(vfeat, 3);
        std::vector<std::size_t> h(20);
        for (auto& i : h) i = rng.below(20);
        Tensor64 gathered(Shape{20, 18});
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 18; ++j) gathered[i * 18 + j] = vp[h[i] * 18 + j];
        const Tensor64 expected = reference::fold(gathered, 2, 5, 4, 3);
        const Tensor64 got = fold(gather_rows(unfold(V::constant(vfeat), 3), h), 2, 5, 4, 3).value();
        CHECK(testing::max_abs_diff(got, expected) <= 1e-6);
        CHECK(to64(transfer(vp.cast<float>(), h)) == gathered.cast<float>().cast<double>());
    }

    TEST_CASE("identity transfer of a constant image is constant") {
        const Tensor64 vp = unfold(V::constant(Tensor64(Shape{2, 4, 4}, 0.6)), 3).value();
        std::vector<std::size_t> h(16);
        std::iota(h.begin(), h.end(), std::size_t{0});
        const Tensor64 t = fold(gather_rows(V::constant(vp), h), 2, 4, 4, 3).value();
        for (double v : t.data()) CHECK(v == doctest::Approx(0.6).epsilon(1e-14));
    }
}

TEST_SUITE("relevance") {
    TEST_CASE("equal and orthogonal patches") {
        const Tensor q(Shape{2, 3}, std::vector<float>{1, 2, 2, 0, 0, 5});
        const Tensor k(Shape{2, 3}, std::vector<float>{1, 2, 2, 3, -1.5f, 0});
        const Tensor r = relevance_matrix(q, k);
        CHECK(r[0] == doctest::Approx(1.0f));
        CHECK(r[3] == 0.0f);  // (0,0,5) . (3,-1.5,0)
        CHECK(r[1] == 0.0f);  // (1,2,2) . (3,-1.5,0)
    }

    TEST_CASE("zero-norm patches relate to nothing") {
        const Tensor q(Shape{2, 2}, std::vector<float>{0, 0, 1, 1});
        const Tensor k(Shape{2, 2}, std::vector<float>{1, 0, 0, 0});
        const Tensor r = relevance_matrix(q, k);
        CHECK(r[0] == 0.0f);
        CHECK(r[1] == 0.0f);
        CHECK(r[3] == 0.0f);
        CHECK(r[2] == doctest::Approx(std::sqrt(0.5)));
    }

    TEST_CASE("random 5x8 against 7x8 matches the double-loop oracle") {
        Rng rng(85);
        const Tensor64 q = random_tensor(Shape{5, 8}, rng), k = random_tensor(Shape{7, 8}, rng);
        CHECK(testing::max_abs_diff(relevance(V::constant(q), V::constant(k)).value(), reference::relevance(q, k)) <=
              1e-6);
        CHECK(testing::max_abs_diff(to64(relevance_matrix(q.cast<float>(), k.cast<float>())),
                                    reference::relevance(q, k)) <= 1e-6);
        CHECK(testing::sum_of(reference::relevance(q, k)) == doctest::Approx(-2.8740913109668638).epsilon(1e-12));
    }

    TEST_CASE("patch relevance equals relevance of unfolded features") {
        Rng rng(86);
        const Tensor64 fq = random_tensor(Shape{3, 5, 6}, rng), fk = random_tensor(Shape{3, 5, 6}, rng);
        const Tensor64 expected = reference::relevance(reference::unfold(fq, 3), reference::unfold(fk, 3));
        CHECK(testing::max_abs_diff(patch_relevance(V::constant(fq), V::constant(fk), 3).value(), expected) <= 1e-10);
    }

    TEST_CASE("dimension mismatch") {
        CHECK_THROWS_AS(relevance_matrix(Tensor(Shape{2, 3}), Tensor(Shape{2, 4})), DimensionError);
    }
}

TEST_SUITE("hard and soft attention") {
    TEST_CASE("ties go to the smallest index") {
        const Tensor r(Shape{1, 3}, std::vector<float>{0.1f, 0.9f, 0.9f});
        CHECK(hard_attention(r) == std::vector<std::size_t>{1});
        CHECK(soft_attention(r)[0] == 0.9f);
    }

    TEST_CASE("self-match gives the identity and unit confidence") {
        Rng rng(87);
        const Tensor64 p = random_tensor(Shape{12, 9}, rng);
        const Tensor r = relevance_matrix(p.cast<float>(), p.cast<float>());
        const auto h = hard_attention(r);
        const Tensor s = soft_attention(r);
        for (std::size_t i = 0; i < 12; ++i) {
            CHECK(h[i] == i);
            CHECK(s[i] == doctest::Approx(1.0).epsilon(1e-6));
        }
    }

    TEST_CASE("constant relevance gives constant confidence") {
        const Tensor s = soft_attention(Tensor(Shape{4, 5}, 0.3f));
        for (float v : s.data()) CHECK(v == 0.3f);
    }

    TEST_CASE("random 20x30 matches the loop argmax and max oracles") {
        Rng rng(88);
        const Tensor64 r = random_tensor(Shape{20, 30}, rng);
        CHECK(hard_attention(r.cast<float>()) == reference::argmax_rows(r));
        const Tensor s = soft_attention(r.cast<float>());
        const auto expected = reference::max_rows(r);
        for (std::size_t i = 0; i < 20; ++i) CHECK(s[i] == static_cast<float>(expected[i]));
    }

    TEST_CASE("attention invariants on 20 self-reference cases") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const CheckOutcome outcome = attention_self_reference(seed);
            INFO(outcome.detail);
            CHECK(outcome.passed);
        }
    }

    TEST_CASE("scaling one key patch leaves the hard index unchanged") {
        Rng rng(89);
        const Tensor64 q = random_tensor(Shape{10, 9}, rng);
        Tensor64 k = random_tensor(Shape{15, 9}, rng);
        const auto before = reference::argmax_rows(reference::relevance(q, k));
        for (std::size_t j = 0; j < 15; j += 3) {
            Tensor64 scaled = k;
            const double factor = 0.1 + 3.0 * rng.uniform();
            for (std::size_t d = 0; d < 9; ++d) scaled[j * 9 + d] *= factor;
            CHECK(hard_attention(relevance_matrix(q.cast<float>(), scaled.cast<float>())) ==
                  hard_attention(relevance_matrix(q.cast<float>(), k.cast<float>())));
            CHECK(reference::argmax_rows(reference::relevance(q, scaled)) == before);
        }
    }

    TEST_CASE("attention result is consistent on a real band") {
        Rng rng(90);
        const TextureTransformer<float> tt(small_config());
        const RasterVolume pan = testing::random_volume(16, 16, 1, rng, 0.1, 0.9);
        const RasterVolume lr_up = upsample_bicubic(testing::random_volume(4, 4, 1, rng, 0.1, 0.9), 4);
        const AttentionResult a = compute_attention(tt, lr_up, pan, 4);
        CHECK(a.relevance.shape() == Shape{256, 256});
        CHECK(a.soft.shape() == Shape{1, 16, 16});
        CHECK(a.transferred.shape() == Shape{4, 16, 16});
        for (std::size_t i = 0; i < 256; ++i) {
            CHECK(a.hard[i] < 256);
            CHECK(a.soft[i] == a.relevance[i * 256 + a.hard[i]]);
            for (std::size_t j = 0; j < 256; ++j) CHECK(std::abs(a.relevance[i * 256 + j]) <= 1.0f + 1e-5f);
        }
    }
}

TEST_SUITE("synthesis") {
    TEST_CASE("zero gate leaves the features untouched") {
        Rng rng(91);
        TextureTransformer<double> tt(small_config());
        tt.randomize_zero_layers(4);
        const V f = V::constant(random_tensor(Shape{4, 6, 6}, rng));
        const V t = V::constant(random_tensor(Shape{4, 6, 6}, rng));
        CHECK(tt.synthesize(f, t, V::constant(Tensor64(Shape{1, 6, 6}))).value() == f.value());
    }

    TEST_CASE("zero-initialized synthesis ignores the gate") {
        Rng rng(92);
        const TextureTransformer<double> tt(small_config());
        const V f = V::constant(random_tensor(Shape{4, 6, 6}, rng));
        const V t = V::constant(random_tensor(Shape{4, 6, 6}, rng));
        CHECK(tt.synthesize(f, t, V::constant(random_tensor(Shape{1, 6, 6}, rng))).value() == f.value());
    }

    TEST_CASE("gradient through the synthesis path") {
        TextureTransformer<double> tt(small_config(3));
        tt.randomize_zero_layers(9);
        Rng rng(93);
        V f = V::parameter(random_tensor(Shape{3, 5, 5}, rng));
        V t = V::parameter(random_tensor(Shape{3, 5, 5}, rng));
        V s = V::parameter(random_tensor(Shape{1, 5, 5}, rng));
        const V w = V::constant(random_tensor(Shape{3, 5, 5}, rng));
        ParameterList<double> params{{"f", f}, {"t", t}, {"s", s}};
        for (auto& p : tt.parameters())
            if (p.first.rfind("synth", 0) == 0) params.push_back(p);
        const GradCheckReport report =
            grad_check(params, [&] { return sum(elementwise_mul(tt.synthesize(f, t, s), w)); });
        INFO(report.to_text());
        CHECK(report.passed);
    }
}

TEST_SUITE("texture transformer") {
    TEST_CASE("fresh transformer returns its input band") {
        Rng rng(94);
        const TextureTransformer<float> tt(small_config());
        const RasterVolume sr = testing::random_volume(16, 16, 1, rng, 0.1, 0.9);
        const RasterVolume lr_up = testing::random_volume(16, 16, 1, rng, 0.1, 0.9);
        const RasterVolume pan = testing::random_volume(16, 16, 1, rng, 0.1, 0.9);
        CHECK(texture_transfer_band(tt, sr, lr_up, pan, 4) == sr);
    }

    TEST_CASE("bands are refined by one shared operator") {
        Rng rng(95);
        TextureTransformer<float> tt(small_config());
        tt.randomize_zero_layers(7);
        const RasterVolume sr = testing::random_volume(12, 12, 3, rng, 0.1, 0.9);
        const RasterVolume lr_up = testing::random_volume(12, 12, 3, rng, 0.1, 0.9);
        const RasterVolume pan = testing::random_volume(12, 12, 1, rng, 0.1, 0.9);
        const RasterVolume out = texture_transfer(tt, sr, lr_up, pan, 4);
        CHECK(out != sr);

        const std::vector<std::size_t> perm{2, 0, 1};
        auto permute = [&](const RasterVolume& v) {
            std::vector<RasterVolume> bands;
            for (auto l : perm) bands.push_back(v.band_volume(l));
            return stack_bands(bands);
        };
        CHECK(texture_transfer(tt, permute(sr), permute(lr_up), pan, 4) == permute(out));
        CHECK(out.band_volume(1) == texture_transfer_band(tt, sr.band_volume(1), lr_up.band_volume(1), pan, 4));
    }

    TEST_CASE("weights round trip and stage tag") {
        TextureTransformer<float> tt(small_config());
        tt.randomize_zero_layers(2);
        const WeightsFile w = tt.to_weights();
        CHECK(w.stage == "texture");
        CHECK(w.blocks.size() == 14);
        CHECK(TextureTransformer<float>::from_weights(w).to_weights() == w);
        WeightsFile wrong = w;
        wrong.stage = "fusion";
        CHECK_THROWS_AS(TextureTransformer<float>::from_weights(wrong), DataError);
    }

    TEST_CASE("shape violations") {
        const TextureTransformer<float> tt(small_config());
        CHECK_THROWS_AS(texture_transfer(tt, RasterVolume(8, 8, 2), RasterVolume(8, 8, 3), RasterVolume(8, 8, 1), 4),
                        DataError);
        CHECK_THROWS_AS(texture_transfer(tt, RasterVolume(8, 8, 2), RasterVolume(8, 8, 2), RasterVolume(8, 4, 1), 4),
                        DataError);
        TextureConfig bad = small_config();
        bad.patch = 4;
        CHECK_THROWS_AS(bad.validate(), ContractError);
    }

    TEST_CASE("full gradient check including gather and max paths") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const GradCheckReport report = texture_gradient_check(seed);
            INFO(report.to_text());
            CHECK(report.passed);
        }
    }
}

TEST_SUITE("pipeline") {
    TEST_CASE("output is scale times the input size") {
        Rng rng(96);
        FusionConfig fc;
        fc.channels = 2;
        fc.blocks = 1;
        const FusionNet<float> fusion(3, fc, false);
        TextureTransformer<float> tt(small_config());
        tt.randomize_zero_layers(1);
        const RasterVolume ms = testing::random_volume(4, 5, 3, rng, 0.1, 0.9);
        const RasterVolume pan = testing::random_volume(16, 20, 1, rng, 0.1, 0.9);
        const RasterVolume step1 = pansharpen(fusion, nullptr, ms, pan);
        const RasterVolume full = pansharpen(fusion, &tt, ms, pan);
        CHECK(step1.width == 16);
        CHECK(step1.height == 20);
        CHECK(full.bands == 3);
        CHECK(step1 == fusion_forward(fusion, ms, pan));
        CHECK(full != step1);
        const TextureTransformer<float> fresh(small_config());
        CHECK(pansharpen(fusion, &fresh, ms, pan) == step1);
    }
}

TEST_SUITE("texture training") {
    std::vector<PatchPair> dataset() {
        auto pairs = synthetic_pairs(2, 4, 2, 4, 31, Split::train);
        auto val = synthetic_pairs(1, 4, 2, 4, 32, Split::val);
        pairs.insert(pairs.end(), val.begin(), val.end());
        return pairs;
    }

    TEST_CASE("fusion stays bit-identical and reruns reproduce") {
        const auto pairs = dataset();
        FusionConfig fc;
        fc.channels = 2;
        fc.blocks = 1;
        const FusionNet<float> fusion(2, fc, false);
        const auto before = encode_weights(fusion.to_weights());
        const auto a = train_texture(pairs, fusion, small_config());
        CHECK(encode_weights(fusion.to_weights()) == before);
        const auto b = train_texture(pairs, fusion, small_config());
        CHECK(encode_weights(a.weights) == encode_weights(b.weights));
        CHECK(a.log.to_text() == b.log.to_text());
        CHECK(a.weights.stage == "texture");
    }

    TEST_CASE("short run regression") {
        FusionConfig fc;
        fc.channels = 2;
        fc.blocks = 1;
        const FusionNet<float> fusion(2, fc, false);
        const auto result = train_texture(dataset(), fusion, small_config());
        CHECK(result.log.epochs.size() == 5);
        CHECK(result.log.epochs.front().train_l1 == doctest::Approx(0.4770980179309845).epsilon(1e-4));
        CHECK(result.log.best_val_l1 == doctest::Approx(0.388588547706604).epsilon(1e-4));
    }

    TEST_CASE("empty splits are refused") {
        FusionConfig fc;
        fc.channels = 2;
        fc.blocks = 1;
        const FusionNet<float> fusion(2, fc);
        CHECK_THROWS_AS(train_texture(synthetic_pairs(2, 4, 2, 4, 1, Split::train), fusion, small_config()), DataError);
    }
}
