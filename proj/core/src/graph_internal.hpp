#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pansharp/autodiff.hpp"

namespace pansharp::detail {

template <class T>
Var<T> make_op(BasicTensor<T> value, const char* op, std::vector<std::shared_ptr<Node<T>>> inputs,
               std::function<void(Node<T>&)> backward_fn) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->op = op;
    node->is_leaf = false;
    node->requires_grad = grad_recording_enabled() && std::any_of(inputs.begin(), inputs.end(),
                                      [](const auto& in) { return in->requires_grad; });
    if (node->requires_grad) {
        node->inputs = std::move(inputs);
        node->backward_fn = std::move(backward_fn);
    }
    return Var<T>(std::move(node));
}

inline void require_rank(const char* op, const char* operand, const Shape& shape, std::size_t rank) {
    if (shape.size() != rank) {
        throw DimensionError(std::string(op) + ": " + operand + " must have rank " + std::to_string(rank) +
                             ", got shape " + shape_string(shape));
    }
}

inline void require_same_shape(const char* op, const Shape& a, const Shape& b) {
    if (a != b) {
        std::string axes;
        if (a.size() != b.size()) {
            axes = "rank " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
        } else {
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i] != b[i]) {
                    axes += (axes.empty() ? "" : ", ") + std::string("axis ") + std::to_string(i) + " (" +
                            std::to_string(a[i]) + " vs " + std::to_string(b[i]) + ")";
                }
            }
        }
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b) +
                             " at " + axes);
    }
}

}  // namespace pansharp::detail
