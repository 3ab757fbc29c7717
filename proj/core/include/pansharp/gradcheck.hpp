#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pansharp/autodiff.hpp"

namespace pansharp {

struct GradCheckBlock {
    std::string name;
    std::size_t count = 0;
    double max_abs_error = 0.0;
    // max |analytic - numeric| over the block, divided by the block's largest
    // gradient magnitude (analytic or numeric), floored at GradCheckOptions::scale_floor.
    double max_rel_error = 0.0;
    bool passed = false;
};

struct GradCheckReport {
    std::vector<GradCheckBlock> blocks;
    double tolerance = 0.0;
    bool passed = false;

    std::string to_text() const;
};

struct GradCheckOptions {
    double step = 1e-4;
    double tolerance = 1e-4;
    // Cap on perturbed entries per block (0 = all); entries are spread evenly.
    std::size_t max_entries_per_block = 0;
    // Blocks whose gradients are all (numerically) zero are compared in
    // absolute terms against this scale instead of dividing 0 by 0.
    double scale_floor = 1e-8;
};

/// Central finite differences against reverse-mode gradients, in 64-bit.
/// `loss` rebuilds the graph from the current parameter values on every call.
GradCheckReport grad_check(ParameterList<double>& params, const std::function<Var<double>()>& loss,
                           const GradCheckOptions& options = {});

}  // namespace pansharp
