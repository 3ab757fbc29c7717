#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pansharp/autodiff.hpp"
#include "pansharp/io.hpp"
#include "pansharp/rng.hpp"

namespace pansharp {

/// Convolution weight + bias pair, 2D ([Cout,Cin,k,k]) or 3D ([Cout,Cin,k,k,k]).
template <class T>
struct ConvLayer {
    std::string name;
    Var<T> weight;
    Var<T> bias;

    /// Uniform(-b, b) with b = sqrt(6 / fan_in); `zero` gives an all-zero layer.
    static ConvLayer make(std::string name, Shape weight_shape, Rng& rng, bool zero = false) {
        BasicTensor<T> w(weight_shape);
        const std::size_t fan_in = w.size() / weight_shape[0];
        if (!zero) {
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
            for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
        }
        return {std::move(name), Var<T>::parameter(std::move(w)),
                Var<T>::parameter(BasicTensor<T>(Shape{weight_shape[0]}, T{0}))};
    }

    Var<T> operator()(const Var<T>& x, Padding padding = Padding::zero) const {
        return weight.shape().size() == 4 ? conv2d(x, weight, bias, padding) : conv3d(x, weight, bias, padding);
    }

    void append_parameters(ParameterList<T>& out) const {
        out.emplace_back(name + ".weight", weight);
        out.emplace_back(name + ".bias", bias);
    }

    void append_blocks(std::vector<WeightBlock>& out) const {
        auto block = [&](const std::string& suffix, const BasicTensor<T>& t) {
            WeightBlock b;
            b.name = name + suffix;
            for (auto d : t.shape()) b.dims.push_back(static_cast<std::uint32_t>(d));
            b.data.assign(t.data().begin(), t.data().end());
            out.push_back(std::move(b));
        };
        block(".weight", weight.value());
        block(".bias", bias.value());
    }

    /// Loads from a weights file, requiring the exact stored shapes.
    static ConvLayer load(const WeightsFile& file, const std::string& name, const Shape& weight_shape) {
        auto read = [&](const std::string& suffix, const Shape& shape) {
            const auto& b = file.block(name + suffix);
            Shape dims(b.dims.begin(), b.dims.end());
            if (dims != shape) {
                throw DataError("weights (" + file.stage + "): block '" + name + suffix + "' has shape " +
                                shape_string(dims) + ", expected " + shape_string(shape));
            }
            return Var<T>::parameter(BasicTensor<T>(shape, std::vector<T>(b.data.begin(), b.data.end())));
        };
        return {name, read(".weight", weight_shape), read(".bias", Shape{weight_shape[0]})};
    }
};

}  // namespace pansharp
