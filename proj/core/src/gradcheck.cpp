#include "pansharp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pansharp {

std::string GradCheckReport::to_text() const {
    std::ostringstream out;
    out.precision(3);
    for (const auto& b : blocks) {
        out << (b.passed ? "ok   " : "FAIL ") << b.name << " n=" << b.count << " rel=" << std::scientific
            << b.max_rel_error << " abs=" << b.max_abs_error << std::defaultfloat << '\n';
    }
    out << (passed ? "passed" : "failed") << " (tolerance " << tolerance << ")\n";
    return out.str();
}

GradCheckReport grad_check(ParameterList<double>& params, const std::function<Var<double>()>& loss,
                           const GradCheckOptions& options) {
    zero_grad(params);
    backward(loss());
    std::vector<Tensor64> analytic;
    for (auto& [name, p] : params) {
        analytic.push_back(p.has_grad() ? p.grad() : Tensor64(p.shape(), 0.0));
    }

    GradCheckReport report;
    report.tolerance = options.tolerance;
    report.passed = true;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& [name, p] = params[k];
        auto values = p.mutable_value().data();
        const std::size_t n = values.size();
        const std::size_t limit = options.max_entries_per_block ? std::min(n, options.max_entries_per_block) : n;
        GradCheckBlock block;
        block.name = name;
        block.count = limit;
        double scale = 0.0;
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t e = 0; e < limit; ++e) {
            const std::size_t i = limit == n ? e : e * n / limit;
            const double saved = values[i];
            values[i] = saved + options.step;
            const double plus = loss().value()[0];
            values[i] = saved - options.step;
            const double minus = loss().value()[0];
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double a = analytic[k][i];
            pairs.emplace_back(a, numeric);
            scale = std::max({scale, std::abs(a), std::abs(numeric)});
        }
        for (const auto& [a, numeric] : pairs) {
            block.max_abs_error = std::max(block.max_abs_error, std::abs(a - numeric));
        }
        block.max_rel_error = block.max_abs_error / std::max(scale, options.scale_floor);
        block.passed = block.max_rel_error <= options.tolerance;
        report.passed = report.passed && block.passed;
        report.blocks.push_back(std::move(block));
    }
    zero_grad(params);
    return report;
}

}  // namespace pansharp
