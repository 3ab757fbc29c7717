#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "pansharp/dataset.hpp"
#include "pansharp/fusion.hpp"
#include "pansharp/io.hpp"
#include "pansharp/layers.hpp"
#include "pansharp/raster.hpp"
#include "pansharp/training.hpp"

namespace pansharp {

struct TextureConfig {
    std::size_t channels = 16;
    std::size_t patch = 3;
    double learning_rate = 1e-4;
    std::size_t batch_size = 16;
    std::size_t patience = 30;
    std::size_t max_epochs = 0;
    std::uint64_t seed = 1;

    void validate() const;
    TrainSettings train_settings() const {
        return {learning_rate, batch_size, patience, max_epochs, seed};
    }
};

/// Everything the attention stage produces for one band.
struct AttentionResult {
    Tensor relevance;                // [Nq, Nk]
    std::vector<std::size_t> hard;   // [Nq], argmax index into the reference patches
    Tensor soft;                     // [1, H, W], max relevance per query position
    Tensor transferred;              // [C, H, W], folded value patches
};

/// Graph-level pieces of the attention stage for one band.
template <class T>
struct AttentionGraph {
    Var<T> relevance;
    std::vector<std::size_t> hard;
    Var<T> soft;         // [1,H,W]
    Var<T> transferred;  // [C,H,W]
};

/// Per-band texture transformer with PAN as the reference. One parameter
/// set serves every band.
///
///   Q = LTE(LR MS-n up), K = LTE(PAN down-up), V = LTE(PAN)
///   r = relevance of 3x3 patches of Q and K, h = argmax_j r, s = max_j r
///   T = fold(V patches selected by h)
///   F = backbone(SR MS-n)
///   F_out = F + synth(concat(F, T)) * S
///   out = SR MS-n + decoder(F_out)
template <class T>
class TextureTransformer {
public:
    TextureTransformer(const TextureConfig& config);

    static TextureTransformer from_weights(const WeightsFile& weights);
    WeightsFile to_weights() const;

    /// Learnable texture extractor: conv-relu-conv-relu, 1 -> C -> C channels.
    Var<T> lte(const Var<T>& image) const;
    Var<T> backbone(const Var<T>& image) const;
    Var<T> decoder(const Var<T>& features) const;

    AttentionGraph<T> attend(const Var<T>& query, const Var<T>& key, const Var<T>& value) const;
    Var<T> synthesize(const Var<T>& features, const Var<T>& transferred, const Var<T>& soft) const;

    /// Unclamped refined band [1,H,W], with the reference features already extracted.
    Var<T> refine_band(const Var<T>& sr_band, const Var<T>& lr_up_band, const Var<T>& key, const Var<T>& value) const;

    /// All bands of sr [L,H,W]; pan_down_up and pan are [1,H,W]. Returns
    /// unclamped [1,H,W] outputs; K and V are extracted once and shared.
    std::vector<Var<T>> refine(const Var<T>& sr, const Var<T>& lr_up, const Var<T>& pan_down_up,
                               const Var<T>& pan) const;

    ParameterList<T> parameters() const;
    std::size_t parameter_count() const;
    std::size_t channels() const { return channels_; }
    std::size_t patch() const { return patch_; }

    template <class U>
    TextureTransformer<U> cast() const {
        return TextureTransformer<U>::from_weights(to_weights());
    }

    /// Gives the zero-initialized layers random values (gradient checks).
    void randomize_zero_layers(std::uint64_t seed);

private:
    TextureTransformer() = default;

    std::size_t channels_ = 0;
    std::size_t patch_ = 3;
    ConvLayer<T> lte1_, lte2_;
    ConvLayer<T> backbone1_, backbone2_;
    ConvLayer<T> synth_;
    ConvLayer<T> decoder1_, decoder2_;
};

/// PAN downsampled then upsampled by `scale`, on the PAN grid.
RasterVolume pan_down_up(const RasterVolume& pan, std::size_t scale);

/// Refines one band. All inputs are single-band and share the HR grid.
RasterVolume texture_transfer_band(const TextureTransformer<float>& tt, const RasterVolume& sr_band,
                                   const RasterVolume& lr_up_band, const RasterVolume& pan, std::size_t scale);

/// Refines every band of sr; lr_up has the same shape as sr.
RasterVolume texture_transfer(const TextureTransformer<float>& tt, const RasterVolume& sr, const RasterVolume& lr_up,
                              const RasterVolume& pan, std::size_t scale);

AttentionResult compute_attention(const TextureTransformer<float>& tt, const RasterVolume& lr_up_band,
                                  const RasterVolume& pan, std::size_t scale);

/// Full two-stage pipeline from LR MS and PAN.
RasterVolume pansharpen(const FusionNet<float>& fusion, const TextureTransformer<float>* texture,
                        const RasterVolume& ms_lr, const RasterVolume& pan);

// Standalone forms of the attention steps on plain tensors.
Tensor relevance_matrix(const Tensor& query_patches, const Tensor& key_patches);
std::vector<std::size_t> hard_attention(const Tensor& relevance);
Tensor soft_attention(const Tensor& relevance);
Tensor transfer(const Tensor& value_patches, const std::vector<std::size_t>& hard);

struct TextureTrainingResult {
    TextureTransformer<float> net;
    WeightsFile weights;
    TrainingLog log;
};

/// Step-1 weights stay fixed; its output is computed once per pair. The loss
/// per pair is the L1 error summed over bands.
TextureTrainingResult train_texture(const std::vector<PatchPair>& pairs, const FusionNet<float>& frozen_fusion,
                                    const TextureConfig& config,
                                    const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace pansharp
