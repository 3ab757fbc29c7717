#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pansharp/dataset.hpp"
#include "pansharp/io.hpp"
#include "pansharp/layers.hpp"
#include "pansharp/raster.hpp"
#include "pansharp/training.hpp"

namespace pansharp {

struct FusionConfig {
    std::size_t channels = 16;
    std::size_t blocks = 3;
    std::size_t kernel = 3;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t patience = 30;
    std::size_t max_epochs = 0;
    std::uint64_t seed = 1;

    void validate() const;
    TrainSettings train_settings() const {
        return {learning_rate, batch_size, patience, max_epochs, seed};
    }
};

/// Step-1 network: 1x1 channel adjust of [M', P] back to L bands, then a
/// residual 3D CNN over the (band, y, x) volume whose output is added to M'.
///
///   Z = adjust(concat(M', P))            [L,H,W]
///   F = lift(Z as [1,L,H,W])             [C,L,H,W]
///   F = F + conv_b(relu(conv_a(F)))      K times
///   X' = M' + proj(F)                    proj is zero at initialization
template <class T>
class FusionNet {
public:
    FusionNet(std::size_t bands, const FusionConfig& config, bool zero_projection = true);

    static FusionNet from_weights(const WeightsFile& weights);
    WeightsFile to_weights() const;

    /// Unclamped X' from the upsampled MS [L,H,W] and PAN [1,H,W].
    Var<T> forward(const Var<T>& ms_up, const Var<T>& pan) const;

    ParameterList<T> parameters() const;
    std::size_t parameter_count() const;

    std::size_t bands() const { return bands_; }
    std::size_t channels() const { return channels_; }
    std::size_t blocks() const { return residual_.size(); }
    std::size_t kernel() const { return kernel_; }

    template <class U>
    FusionNet<U> cast() const {
        return FusionNet<U>::from_weights(to_weights());
    }

private:
    FusionNet() = default;

    std::size_t bands_ = 0;
    std::size_t channels_ = 0;
    std::size_t kernel_ = 3;
    ConvLayer<T> adjust_;
    ConvLayer<T> lift_;
    std::vector<std::pair<ConvLayer<T>, ConvLayer<T>>> residual_;
    ConvLayer<T> proj_;
};

/// M' = bicubic upsample of ms_lr to the PAN grid; X' = clamp(M' + R).
RasterVolume fusion_forward(const FusionNet<float>& net, const RasterVolume& ms_lr, const RasterVolume& pan);

struct FusionTrainingResult {
    FusionNet<float> net;
    WeightsFile weights;
    TrainingLog log;
};

/// Adam on the L1 loss over the pairs tagged train, early stopping on the
/// pairs tagged val.
FusionTrainingResult train_fusion(const std::vector<PatchPair>& pairs, const FusionConfig& config,
                                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace pansharp
