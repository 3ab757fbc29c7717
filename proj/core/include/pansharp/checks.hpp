#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pansharp/gradcheck.hpp"

namespace pansharp {

/// One named check with a short human-readable detail line.
struct CheckOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Finite-difference check of every parameter block of a tiny fusion network
/// (non-zero projection) under an L1 loss against a random target.
GradCheckReport fusion_gradient_check(std::uint64_t seed, const GradCheckOptions& options = {});

/// Same for the texture transformer over two bands, zero-initialized layers
/// randomized so every path carries gradient.
GradCheckReport texture_gradient_check(std::uint64_t seed, const GradCheckOptions& options = {});

/// Self-reference attention on a random feature source: h is the identity,
/// s >= 1 - 1e-6, |r| <= 1 + 1e-5 and s_i == r(i, h_i).
CheckOutcome attention_self_reference(std::uint64_t seed);

/// Each metric against its literal oracle on `volumes` random volumes.
CheckOutcome metric_oracles(std::uint64_t seed, std::size_t volumes, double tolerance = 1e-7);

/// Up/down resampling against the 2D direct-tap oracles.
CheckOutcome resample_oracles(std::uint64_t seed, double tolerance = 1e-6);

/// The suite run by `pansharp selfcheck`.
std::vector<CheckOutcome> run_selfcheck(std::size_t seeds = 5);

}  // namespace pansharp
