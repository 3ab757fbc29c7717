#pragma once

#include <cstddef>
#include <vector>

#include "pansharp/autodiff.hpp"

namespace pansharp {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment buffers, one pair per parameter block.
template <class T>
struct AdamState {
    std::vector<BasicTensor<T>> first_moment;
    std::vector<BasicTensor<T>> second_moment;
    std::size_t step = 0;
    AdamHyper hyper;

    static AdamState for_parameters(const ParameterList<T>& params, AdamHyper hyper = {});
};

/// One bias-corrected Adam update. Parameters without a gradient are
/// treated as having a zero gradient.
template <class T>
void adam_step(ParameterList<T>& params, AdamState<T>& state, double learning_rate);

}  // namespace pansharp
