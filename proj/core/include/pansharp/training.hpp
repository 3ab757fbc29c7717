#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pansharp/autodiff.hpp"

namespace pansharp {

struct TrainSettings {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t patience = 30;
    std::size_t max_epochs = 0;  // 0: no cap, only the patience rule stops training
    std::uint64_t seed = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_l1 = 0.0;  // mean loss over the epoch's batches, before each update
    double val_l1 = 0.0;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_l1 = 0.0;

    /// One `epoch,train_l1,val_l1` line per epoch.
    std::string to_text() const;
};

struct TrainingProblem {
    std::size_t train_count = 0;
    std::size_t val_count = 0;
    /// Loss graph of training sample i (gradients flow to the parameters).
    std::function<Var<float>(std::size_t)> train_loss;
    /// Validation loss of sample i; no gradients needed.
    std::function<double(std::size_t)> val_loss;
};

/// Adam on mini-batches in seeded order, one validation pass per epoch,
/// best-validation weights restored at the end, stop after `patience`
/// epochs without a new best (patience 0 runs exactly one epoch).
TrainingLog run_training(ParameterList<float>& params, const TrainingProblem& problem, const TrainSettings& settings,
                         const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace pansharp
