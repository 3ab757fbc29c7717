#include "pansharp/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pansharp/optim.hpp"
#include "pansharp/rng.hpp"

namespace pansharp {

std::string TrainingLog::to_text() const {
    std::ostringstream out;
    char buf[96];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", e.epoch, e.train_l1, e.val_l1);
        out << buf;
    }
    return out.str();
}

TrainingLog run_training(ParameterList<float>& params, const TrainingProblem& problem, const TrainSettings& settings,
                         const std::function<void(const EpochRecord&)>& on_epoch) {
    if (problem.train_count == 0) throw ContractError("training needs a non-empty train split");
    if (problem.val_count == 0) throw ContractError("training needs a non-empty validation split");
    if (settings.batch_size == 0) throw ContractError("batch size must be positive");

    auto state = AdamState<float>::for_parameters(params);
    Rng rng(settings.seed);
    std::vector<std::size_t> order(problem.train_count);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<Tensor> best;
    TrainingLog log;
    std::size_t since_best = 0;
    for (std::size_t epoch = 0;; ++epoch) {
        rng.shuffle(order);
        double train_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
            const std::size_t end = std::min(order.size(), start + settings.batch_size);
            const float inv = 1.0f / static_cast<float>(end - start);
            zero_grad(params);
            for (std::size_t k = start; k < end; ++k) {
                Var<float> loss = problem.train_loss(order[k]);
                const double value = loss.value()[0];
                if (!std::isfinite(value)) {
                    throw DataError("non-finite training loss at epoch " + std::to_string(epoch) + ", sample " +
                                    std::to_string(order[k]));
                }
                train_total += value;
                backward(scalar_mul(loss, inv));
            }
            adam_step(params, state, settings.learning_rate);
        }
        double val_total = 0.0;
        for (std::size_t i = 0; i < problem.val_count; ++i) val_total += problem.val_loss(i);
        EpochRecord rec{epoch, train_total / static_cast<double>(order.size()),
                        val_total / static_cast<double>(problem.val_count)};
        if (!std::isfinite(rec.val_l1)) {
            throw DataError("non-finite validation loss at epoch " + std::to_string(epoch));
        }
        log.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (epoch == 0 || rec.val_l1 < log.best_val_l1) {
            log.best_val_l1 = rec.val_l1;
            log.best_epoch = epoch;
            since_best = 0;
            best.clear();
            for (const auto& [name, p] : params) best.push_back(p.value());
        } else {
            ++since_best;
        }
        if (since_best >= settings.patience) break;
        if (settings.max_epochs && epoch + 1 >= settings.max_epochs) break;
    }
    for (std::size_t k = 0; k < params.size(); ++k) params[k].second.mutable_value() = best[k];
    zero_grad(params);
    return log;
}

}  // namespace pansharp
