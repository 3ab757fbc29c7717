#include "pansharp/texture.hpp"

#include <string>

#include "pansharp/resample.hpp"

namespace pansharp {

void TextureConfig::validate() const {
    if (channels < 1) throw ContractError("texture: channels must be >= 1");
    if (patch % 2 == 0) throw ContractError("texture: patch size must be odd");
    if (batch_size < 1) throw ContractError("texture: batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ContractError("texture: learning rate must be positive");
}

template <class T>
TextureTransformer<T>::TextureTransformer(const TextureConfig& config)
    : channels_(config.channels), patch_(config.patch) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t c = config.channels;
    lte1_ = ConvLayer<T>::make("lte1", {c, 1, 3, 3}, rng);
    lte2_ = ConvLayer<T>::make("lte2", {c, c, 3, 3}, rng);
    backbone1_ = ConvLayer<T>::make("backbone1", {c, 1, 3, 3}, rng);
    backbone2_ = ConvLayer<T>::make("backbone2", {c, c, 3, 3}, rng);
    synth_ = ConvLayer<T>::make("synth", {c, 2 * c, 3, 3}, rng, true);
    decoder1_ = ConvLayer<T>::make("decoder1", {c, c, 3, 3}, rng);
    decoder2_ = ConvLayer<T>::make("decoder2", {1, c, 3, 3}, rng, true);
}

template <class T>
void TextureTransformer<T>::randomize_zero_layers(std::uint64_t seed) {
    Rng rng(seed);
    synth_ = ConvLayer<T>::make("synth", synth_.weight.shape(), rng);
    decoder2_ = ConvLayer<T>::make("decoder2", decoder2_.weight.shape(), rng);
    for (auto* layer : {&synth_, &decoder2_}) {
        for (auto& v : layer->bias.mutable_value().data()) v = static_cast<T>(rng.uniform(-0.1, 0.1));
    }
}

template <class T>
TextureTransformer<T> TextureTransformer<T>::from_weights(const WeightsFile& weights) {
    if (weights.stage != "texture") {
        throw DataError("expected texture weights, got stage '" + weights.stage + "'");
    }
    const auto& first = weights.block("lte1.weight");
    if (first.dims.size() != 4) throw DataError("texture weights: lte1.weight must have rank 4");
    TextureTransformer tt;
    tt.channels_ = first.dims[0];
    const std::size_t c = tt.channels_;
    tt.lte1_ = ConvLayer<T>::load(weights, "lte1", {c, 1, 3, 3});
    tt.lte2_ = ConvLayer<T>::load(weights, "lte2", {c, c, 3, 3});
    tt.backbone1_ = ConvLayer<T>::load(weights, "backbone1", {c, 1, 3, 3});
    tt.backbone2_ = ConvLayer<T>::load(weights, "backbone2", {c, c, 3, 3});
    tt.synth_ = ConvLayer<T>::load(weights, "synth", {c, 2 * c, 3, 3});
    tt.decoder1_ = ConvLayer<T>::load(weights, "decoder1", {c, c, 3, 3});
    tt.decoder2_ = ConvLayer<T>::load(weights, "decoder2", {1, c, 3, 3});
    if (weights.blocks.size() != 14) {
        throw DataError("texture weights: " + std::to_string(weights.blocks.size()) + " blocks, expected 14");
    }
    return tt;
}

template <class T>
WeightsFile TextureTransformer<T>::to_weights() const {
    WeightsFile file;
    file.stage = "texture";
    for (const auto* layer : {&lte1_, &lte2_, &backbone1_, &backbone2_, &synth_, &decoder1_, &decoder2_}) {
        layer->append_blocks(file.blocks);
    }
    return file;
}

template <class T>
ParameterList<T> TextureTransformer<T>::parameters() const {
    ParameterList<T> out;
    for (const auto* layer : {&lte1_, &lte2_, &backbone1_, &backbone2_, &synth_, &decoder1_, &decoder2_}) {
        layer->append_parameters(out);
    }
    return out;
}

template <class T>
std::size_t TextureTransformer<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : parameters()) n += p.value().size();
    return n;
}

namespace {

void require_single_band(const char* what, const Shape& s) {
    if (s.size() != 3 || s[0] != 1) {
        throw DimensionError(std::string("texture: ") + what + " must be a single-band [1,H,W] image, got " +
                             shape_string(s));
    }
}

}  // namespace

template <class T>
Var<T> TextureTransformer<T>::lte(const Var<T>& image) const {
    require_single_band("texture extractor input", image.shape());
    return relu(lte2_(relu(lte1_(image))));
}

template <class T>
Var<T> TextureTransformer<T>::backbone(const Var<T>& image) const {
    require_single_band("backbone input", image.shape());
    return backbone2_(relu(backbone1_(image)));
}

template <class T>
Var<T> TextureTransformer<T>::decoder(const Var<T>& features) const {
    return decoder2_(relu(decoder1_(features)));
}

template <class T>
AttentionGraph<T> TextureTransformer<T>::attend(const Var<T>& query, const Var<T>& key, const Var<T>& value) const {
    if (key.shape() != value.shape()) {
        throw DimensionError("texture: key features " + shape_string(key.shape()) + " and value features " +
                             shape_string(value.shape()) + " differ");
    }
    const Shape& qs = query.shape();
    Var<T> r = patch_relevance(query, key, patch_);
    auto best = row_max(r);
    Var<T> picked = gather_rows(unfold(value, patch_), best.index);
    Var<T> t = fold(picked, qs[0], qs[1], qs[2], patch_);
    Var<T> s = reshape(best.values, Shape{1, qs[1], qs[2]});
    return {std::move(r), std::move(best.index), std::move(s), std::move(t)};
}

template <class T>
Var<T> TextureTransformer<T>::synthesize(const Var<T>& features, const Var<T>& transferred, const Var<T>& soft) const {
    return add(features, elementwise_mul(synth_(concat_channels<T>({features, transferred})), soft));
}

template <class T>
Var<T> TextureTransformer<T>::refine_band(const Var<T>& sr_band, const Var<T>& lr_up_band, const Var<T>& key,
                                          const Var<T>& value) const {
    require_single_band("SR band", sr_band.shape());
    if (lr_up_band.shape() != sr_band.shape()) {
        throw DimensionError("texture: upsampled LR band " + shape_string(lr_up_band.shape()) + " and SR band " +
                             shape_string(sr_band.shape()) + " differ");
    }
    if (key.shape()[1] != sr_band.shape()[1] || key.shape()[2] != sr_band.shape()[2]) {
        throw DimensionError("texture: reference " + shape_string(key.shape()) + " is not on the grid of " +
                             shape_string(sr_band.shape()));
    }
    auto att = attend(lte(lr_up_band), key, value);
    Var<T> fused = synthesize(backbone(sr_band), att.transferred, att.soft);
    return add(sr_band, decoder(fused));
}

template <class T>
std::vector<Var<T>> TextureTransformer<T>::refine(const Var<T>& sr, const Var<T>& lr_up, const Var<T>& pan_down_up,
                                                  const Var<T>& pan) const {
    if (sr.shape().size() != 3 || lr_up.shape() != sr.shape()) {
        throw DimensionError("texture: SR " + shape_string(sr.shape()) + " and upsampled LR " +
                             shape_string(lr_up.shape()) + " must both be [L,H,W]");
    }
    Var<T> key = lte(pan_down_up);
    Var<T> value = lte(pan);
    std::vector<Var<T>> out;
    for (std::size_t b = 0; b < sr.shape()[0]; ++b) {
        out.push_back(refine_band(slice_channels(sr, b, 1), slice_channels(lr_up, b, 1), key, value));
    }
    return out;
}

template class TextureTransformer<float>;
template class TextureTransformer<double>;

RasterVolume pan_down_up(const RasterVolume& pan, std::size_t scale) {
    return upsample_bicubic(downsample_bicubic(pan, scale), scale);
}

namespace {

void require_grid(const RasterVolume& a, const RasterVolume& b, const char* what) {
    if (a.width != b.width || a.height != b.height) {
        throw DataError(std::string("texture: ") + what + " is " + std::to_string(b.width) + "x" +
                        std::to_string(b.height) + ", expected " + std::to_string(a.width) + "x" +
                        std::to_string(a.height));
    }
}

}  // namespace

RasterVolume texture_transfer(const TextureTransformer<float>& tt, const RasterVolume& sr, const RasterVolume& lr_up,
                              const RasterVolume& pan, std::size_t scale) {
    if (pan.bands != 1) throw DataError("texture: PAN must have 1 band");
    if (lr_up.bands != sr.bands) throw DataError("texture: SR and upsampled LR band counts differ");
    require_grid(sr, lr_up, "upsampled LR MS");
    require_grid(sr, pan, "PAN");
    NoGradGuard no_grad;
    auto outs = tt.refine(Var<float>::constant(sr.to_tensor()), Var<float>::constant(lr_up.to_tensor()),
                          Var<float>::constant(pan_down_up(pan, scale).to_tensor()),
                          Var<float>::constant(pan.to_tensor()));
    std::vector<RasterVolume> bands;
    for (auto& o : outs) bands.push_back(RasterVolume::from_tensor(o.value()));
    RasterVolume result = stack_bands(bands);
    result.clamp_unit();
    return result;
}

RasterVolume texture_transfer_band(const TextureTransformer<float>& tt, const RasterVolume& sr_band,
                                   const RasterVolume& lr_up_band, const RasterVolume& pan, std::size_t scale) {
    if (sr_band.bands != 1 || lr_up_band.bands != 1) throw DataError("texture: band inputs must be single-band");
    return texture_transfer(tt, sr_band, lr_up_band, pan, scale);
}

AttentionResult compute_attention(const TextureTransformer<float>& tt, const RasterVolume& lr_up_band,
                                  const RasterVolume& pan, std::size_t scale) {
    if (lr_up_band.bands != 1 || pan.bands != 1) throw DataError("texture: attention inputs must be single-band");
    require_grid(lr_up_band, pan, "PAN");
    NoGradGuard no_grad;
    auto att = tt.attend(tt.lte(Var<float>::constant(lr_up_band.to_tensor())),
                         tt.lte(Var<float>::constant(pan_down_up(pan, scale).to_tensor())),
                         tt.lte(Var<float>::constant(pan.to_tensor())));
    return {att.relevance.value(), std::move(att.hard), att.soft.value(), att.transferred.value()};
}

RasterVolume pansharpen(const FusionNet<float>& fusion, const TextureTransformer<float>* texture,
                        const RasterVolume& ms_lr, const RasterVolume& pan) {
    RasterVolume sr = fusion_forward(fusion, ms_lr, pan);
    if (!texture) return sr;
    const std::size_t scale = pan.width / ms_lr.width;
    return texture_transfer(*texture, sr, upsample_bicubic(ms_lr, scale), pan, scale);
}

Tensor relevance_matrix(const Tensor& query_patches, const Tensor& key_patches) {
    return relevance(Var<float>::constant(query_patches), Var<float>::constant(key_patches)).value();
}

std::vector<std::size_t> hard_attention(const Tensor& relevance) {
    return row_max(Var<float>::constant(relevance)).index;
}

Tensor soft_attention(const Tensor& relevance) { return row_max(Var<float>::constant(relevance)).values.value(); }

Tensor transfer(const Tensor& value_patches, const std::vector<std::size_t>& hard) {
    return gather_rows(Var<float>::constant(value_patches), hard).value();
}

TextureTrainingResult train_texture(const std::vector<PatchPair>& pairs, const FusionNet<float>& frozen_fusion,
                                    const TextureConfig& config,
                                    const std::function<void(const EpochRecord&)>& on_epoch) {
    config.validate();
    struct Sample {
        Var<float> sr, lr_up, pan_du, pan;
        std::vector<Var<float>> gt_bands;
    };
    std::vector<Sample> train, val;
    for (const auto& p : pairs) {
        if (p.split != Split::train && p.split != Split::val) continue;
        const std::size_t scale = infer_scale(p.ms, p.pan, p.gt);
        Sample s;
        s.sr = Var<float>::constant(fusion_forward(frozen_fusion, p.ms, p.pan).to_tensor());
        s.lr_up = Var<float>::constant(upsample_bicubic(p.ms, scale).to_tensor());
        s.pan_du = Var<float>::constant(pan_down_up(p.pan, scale).to_tensor());
        s.pan = Var<float>::constant(p.pan.to_tensor());
        for (std::size_t b = 0; b < p.gt.bands; ++b) {
            s.gt_bands.push_back(Var<float>::constant(p.gt.band_volume(b).to_tensor()));
        }
        (p.split == Split::train ? train : val).push_back(std::move(s));
    }
    if (train.empty()) throw DataError("texture: train split is empty");
    if (val.empty()) throw DataError("texture: validation split is empty");

    TextureTransformer<float> net(config);
    auto params = net.parameters();
    auto sample_loss = [&net](const Sample& s) {
        auto outs = net.refine(s.sr, s.lr_up, s.pan_du, s.pan);
        Var<float> total = l1_loss(outs[0], s.gt_bands[0]);
        for (std::size_t b = 1; b < outs.size(); ++b) total = add(total, l1_loss(outs[b], s.gt_bands[b]));
        return total;
    };
    TrainingProblem problem;
    problem.train_count = train.size();
    problem.val_count = val.size();
    problem.train_loss = [&](std::size_t i) { return sample_loss(train[i]); };
    problem.val_loss = [&](std::size_t i) {
        NoGradGuard no_grad;
        return static_cast<double>(sample_loss(val[i]).value()[0]);
    };
    TrainingLog log = run_training(params, problem, config.train_settings(), on_epoch);
    WeightsFile weights = net.to_weights();
    return {std::move(net), std::move(weights), std::move(log)};
}

}  // namespace pansharp
