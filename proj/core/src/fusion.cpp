#include "pansharp/fusion.hpp"

#include <string>

#include "pansharp/resample.hpp"

namespace pansharp {

void FusionConfig::validate() const {
    if (channels < 1) throw ContractError("fusion: channels must be >= 1");
    if (blocks < 1) throw ContractError("fusion: residual blocks must be >= 1");
    if (kernel % 2 == 0) throw ContractError("fusion: kernel size must be odd");
    if (batch_size < 1) throw ContractError("fusion: batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ContractError("fusion: learning rate must be positive");
}

template <class T>
FusionNet<T>::FusionNet(std::size_t bands, const FusionConfig& config, bool zero_projection)
    : bands_(bands), channels_(config.channels), kernel_(config.kernel) {
    config.validate();
    if (bands < 1) throw ContractError("fusion: need at least one band");
    Rng rng(config.seed);
    const std::size_t c = config.channels, k = config.kernel;
    adjust_ = ConvLayer<T>::make("adjust", {bands, bands + 1, 1, 1}, rng);
    lift_ = ConvLayer<T>::make("lift", {c, 1, k, k, k}, rng);
    for (std::size_t b = 0; b < config.blocks; ++b) {
        const std::string prefix = "block" + std::to_string(b);
        auto a = ConvLayer<T>::make(prefix + ".conv_a", {c, c, k, k, k}, rng);
        auto bb = ConvLayer<T>::make(prefix + ".conv_b", {c, c, k, k, k}, rng);
        residual_.emplace_back(std::move(a), std::move(bb));
    }
    proj_ = ConvLayer<T>::make("proj", {1, c, k, k, k}, rng, zero_projection);
}

template <class T>
FusionNet<T> FusionNet<T>::from_weights(const WeightsFile& weights) {
    if (weights.stage != "fusion") {
        throw DataError("expected fusion weights, got stage '" + weights.stage + "'");
    }
    const auto& adjust = weights.block("adjust.weight");
    const auto& lift = weights.block("lift.weight");
    if (adjust.dims.size() != 4 || lift.dims.size() != 5) {
        throw DataError("fusion weights: adjust/lift blocks have unexpected rank");
    }
    FusionNet net;
    net.bands_ = adjust.dims[0];
    net.channels_ = lift.dims[0];
    net.kernel_ = lift.dims[2];
    const std::size_t l = net.bands_, c = net.channels_, k = net.kernel_;
    net.adjust_ = ConvLayer<T>::load(weights, "adjust", {l, l + 1, 1, 1});
    net.lift_ = ConvLayer<T>::load(weights, "lift", {c, 1, k, k, k});
    for (std::size_t b = 0; weights.has_block("block" + std::to_string(b) + ".conv_a.weight"); ++b) {
        const std::string prefix = "block" + std::to_string(b);
        net.residual_.emplace_back(ConvLayer<T>::load(weights, prefix + ".conv_a", {c, c, k, k, k}),
                                   ConvLayer<T>::load(weights, prefix + ".conv_b", {c, c, k, k, k}));
    }
    if (net.residual_.empty()) throw DataError("fusion weights: no residual blocks");
    net.proj_ = ConvLayer<T>::load(weights, "proj", {1, c, k, k, k});
    const std::size_t expected = 6 + 4 * net.residual_.size();
    if (weights.blocks.size() != expected) {
        throw DataError("fusion weights: " + std::to_string(weights.blocks.size()) + " blocks, expected " +
                        std::to_string(expected));
    }
    return net;
}

template <class T>
WeightsFile FusionNet<T>::to_weights() const {
    WeightsFile file;
    file.stage = "fusion";
    adjust_.append_blocks(file.blocks);
    lift_.append_blocks(file.blocks);
    for (const auto& [a, b] : residual_) {
        a.append_blocks(file.blocks);
        b.append_blocks(file.blocks);
    }
    proj_.append_blocks(file.blocks);
    return file;
}

template <class T>
Var<T> FusionNet<T>::forward(const Var<T>& ms_up, const Var<T>& pan) const {
    const Shape& s = ms_up.shape();
    if (s.size() != 3 || s[0] != bands_) {
        throw DimensionError("fusion: upsampled MS must be [" + std::to_string(bands_) + ",H,W], got " +
                             shape_string(s));
    }
    if (pan.shape() != Shape{1, s[1], s[2]}) {
        throw DimensionError("fusion: PAN must be [1," + std::to_string(s[1]) + "," + std::to_string(s[2]) +
                             "], got " + shape_string(pan.shape()));
    }
    Var<T> z = adjust_(concat_channels<T>({ms_up, pan}));
    Var<T> f = lift_(reshape(z, Shape{1, s[0], s[1], s[2]}));
    for (const auto& [a, b] : residual_) {
        f = add(f, b(relu(a(f))));
    }
    Var<T> r = reshape(proj_(f), Shape{s[0], s[1], s[2]});
    return add(ms_up, r);
}

template <class T>
ParameterList<T> FusionNet<T>::parameters() const {
    ParameterList<T> out;
    adjust_.append_parameters(out);
    lift_.append_parameters(out);
    for (const auto& [a, b] : residual_) {
        a.append_parameters(out);
        b.append_parameters(out);
    }
    proj_.append_parameters(out);
    return out;
}

template <class T>
std::size_t FusionNet<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : parameters()) n += p.value().size();
    return n;
}

template class FusionNet<float>;
template class FusionNet<double>;

namespace {

std::size_t checked_scale(const RasterVolume& ms_lr, const RasterVolume& pan) {
    if (pan.bands != 1) throw DataError("fusion: PAN must have 1 band, got " + std::to_string(pan.bands));
    if (ms_lr.empty()) throw DataError("fusion: empty MS input");
    if (pan.width % ms_lr.width != 0 || pan.height % ms_lr.height != 0 ||
        pan.width / ms_lr.width != pan.height / ms_lr.height || pan.width / ms_lr.width < 2) {
        throw DataError("fusion: PAN " + std::to_string(pan.width) + "x" + std::to_string(pan.height) +
                        " must be an integer multiple (>= 2) of MS " + std::to_string(ms_lr.width) + "x" +
                        std::to_string(ms_lr.height));
    }
    return pan.width / ms_lr.width;
}

}  // namespace

RasterVolume fusion_forward(const FusionNet<float>& net, const RasterVolume& ms_lr, const RasterVolume& pan) {
    const std::size_t scale = checked_scale(ms_lr, pan);
    if (ms_lr.bands != net.bands()) {
        throw DataError("fusion: network expects " + std::to_string(net.bands()) + " bands, MS has " +
                        std::to_string(ms_lr.bands));
    }
    const RasterVolume ms_up = upsample_bicubic(ms_lr, scale);
    NoGradGuard no_grad;
    auto out = net.forward(Var<float>::constant(ms_up.to_tensor()), Var<float>::constant(pan.to_tensor()));
    RasterVolume result = RasterVolume::from_tensor(out.value());
    result.clamp_unit();
    return result;
}

FusionTrainingResult train_fusion(const std::vector<PatchPair>& pairs, const FusionConfig& config,
                                  const std::function<void(const EpochRecord&)>& on_epoch) {
    config.validate();
    struct Sample {
        Var<float> ms_up, pan, gt;
    };
    std::vector<Sample> train, val;
    std::size_t bands = 0;
    for (const auto& p : pairs) {
        if (p.split != Split::train && p.split != Split::val) continue;
        const std::size_t scale = checked_scale(p.ms, p.pan);
        if (bands == 0) bands = p.ms.bands;
        if (p.ms.bands != bands || p.gt.bands != bands) throw DataError("fusion: inconsistent band counts in dataset");
        Sample s{Var<float>::constant(upsample_bicubic(p.ms, scale).to_tensor()),
                 Var<float>::constant(p.pan.to_tensor()), Var<float>::constant(p.gt.to_tensor())};
        (p.split == Split::train ? train : val).push_back(std::move(s));
    }
    if (train.empty()) throw DataError("fusion: train split is empty");
    if (val.empty()) throw DataError("fusion: validation split is empty");

    FusionNet<float> net(bands, config);
    auto params = net.parameters();
    TrainingProblem problem;
    problem.train_count = train.size();
    problem.val_count = val.size();
    problem.train_loss = [&](std::size_t i) { return l1_loss(net.forward(train[i].ms_up, train[i].pan), train[i].gt); };
    problem.val_loss = [&](std::size_t i) {
        NoGradGuard no_grad;
        return static_cast<double>(l1_loss(net.forward(val[i].ms_up, val[i].pan), val[i].gt).value()[0]);
    };
    TrainingLog log = run_training(params, problem, config.train_settings(), on_epoch);
    WeightsFile weights = net.to_weights();
    return {std::move(net), std::move(weights), std::move(log)};
}

}  // namespace pansharp
