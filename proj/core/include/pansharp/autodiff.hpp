#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pansharp/tensor.hpp"

namespace pansharp {

template <class T>
struct Node {
    BasicTensor<T> value;
    std::optional<BasicTensor<T>> grad;
    bool requires_grad = false;
    bool is_leaf = true;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    // Reads this->grad and accumulates into inputs[k]->grad.
    std::function<void(Node&)> backward_fn;

    BasicTensor<T>& ensure_grad() {
        if (!grad) {
            grad.emplace(value.shape(), T{0});
        }
        return *grad;
    }
};

/// Handle to a node of the differentiable graph. Copies share the node.
template <class T>
class Var {
public:
    Var() = default;

    static Var leaf(BasicTensor<T> value, bool requires_grad = false) {
        auto node = std::make_shared<Node<T>>();
        node->value = std::move(value);
        node->requires_grad = requires_grad;
        return Var(std::move(node));
    }
    static Var constant(BasicTensor<T> value) { return leaf(std::move(value), false); }
    static Var parameter(BasicTensor<T> value) { return leaf(std::move(value), true); }

    explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    bool defined() const noexcept { return node_ != nullptr; }
    const BasicTensor<T>& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_->requires_grad; }

    /// Leaf values only; used by optimizers and gradient checks.
    BasicTensor<T>& mutable_value() {
        if (!node_->is_leaf) {
            throw ContractError("mutable_value() is only valid on leaf nodes");
        }
        return node_->value;
    }

    bool has_grad() const { return node_->grad.has_value(); }
    const BasicTensor<T>& grad() const {
        if (!node_->grad) {
            throw ContractError("gradient requested on a node that has none");
        }
        return *node_->grad;
    }
    BasicTensor<T>& mutable_grad() { return node_->ensure_grad(); }
    void zero_grad() { node_->grad.reset(); }

    Node<T>* node() const noexcept { return node_.get(); }
    const std::shared_ptr<Node<T>>& node_ptr() const noexcept { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

template <class T>
using NamedParameter = std::pair<std::string, Var<T>>;

template <class T>
using ParameterList = std::vector<NamedParameter<T>>;

/// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
/// calls (two calls without zero_grad double them); interior gradients are
/// reset at the start of every sweep.
template <class T>
void backward(const Var<T>& loss);

template <class T>
void zero_grad(ParameterList<T>& params) {
    for (auto& [name, p] : params) {
        p.zero_grad();
    }
}

enum class Padding { zero, reflect };

// Shapes: input [Cin,H,W], kernel [Cout,Cin,kh,kw], bias [Cout]; odd kernels, same-size output.
template <class T>
Var<T> conv2d(const Var<T>& input, const Var<T>& kernel, const Var<T>& bias, Padding padding);

// Shapes: input [Cin,D,H,W], kernel [Cout,Cin,kd,kh,kw], bias [Cout].
template <class T>
Var<T> conv3d(const Var<T>& input, const Var<T>& kernel, const Var<T>& bias, Padding padding);

template <class T>
Var<T> relu(const Var<T>& x);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> scalar_mul(const Var<T>& a, T factor);

/// Elementwise product. `b` may also be a single-channel map [1,...] that is
/// broadcast across axis 0 of `a`.
template <class T>
Var<T> elementwise_mul(const Var<T>& a, const Var<T>& b);

/// Concatenation along axis 0; trailing extents must agree.
template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape);

/// Channel range [first, first+count) along axis 0.
template <class T>
Var<T> slice_channels(const Var<T>& x, std::size_t first, std::size_t count);

template <class T>
Var<T> sum(const Var<T>& x);

/// Mean absolute difference. Subgradient at zero difference is 0.
template <class T>
Var<T> l1_loss(const Var<T>& pred, const Var<T>& target);

/// Mean squared difference.
template <class T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target);

/// Input [C,H,W] -> [H*W, C*p*p]: one patch centred on every pixel, reflect
/// padding of p/2, centres in row-major order, patch vector laid out
/// channel, then row, then column.
template <class T>
Var<T> unfold(const Var<T>& x, std::size_t patch);

/// Inverse layout of unfold: [H*W, C*p*p] -> [C,H,W]. Contributions falling
/// outside the image are dropped; each pixel is divided by its coverage
/// count (p*p in the interior).
template <class T>
Var<T> fold(const Var<T>& patches, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t patch);

inline constexpr double kZeroNormThreshold = 1e-12;

/// Normalized inner product between every row of q [Nq,D] and k [Nk,D],
/// giving [Nq,Nk]. Rows with norm below kZeroNormThreshold count as the
/// zero direction (relevance 0 against everything, no gradient).
template <class T>
Var<T> relevance(const Var<T>& q, const Var<T>& k);

/// relevance(unfold(q_feat, patch), unfold(k_feat, patch)) for feature maps
/// [C,Hq,Wq] and [C,Hk,Wk], computed from a pixel-level Gram matrix without
/// materializing the patch matrices.
template <class T>
Var<T> patch_relevance(const Var<T>& q_feat, const Var<T>& k_feat, std::size_t patch);

template <class T>
struct RowMaxResult {
    Var<T> values;                   // [N]
    std::vector<std::size_t> index;  // first maximal column per row
};

/// Per-row maximum of a [N,M] matrix; the gradient goes to the (first) argmax.
template <class T>
RowMaxResult<T> row_max(const Var<T>& m);

/// Row selection out[i] = source[index[i]]; backward scatter-adds.
template <class T>
Var<T> gather_rows(const Var<T>& source, const std::vector<std::size_t>& index);

/// While a NoGradGuard is alive on this thread, new op nodes record no
/// backward information (inference / validation passes).
bool grad_recording_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// While a KinkProbe is alive on this thread, relu, l1_loss and row_max record
/// how close their inputs came to a non-differentiable point (relu inputs and
/// L1 residuals near 0, a row maximum nearly tied with the runner-up).
/// Gradient checks use it to reject evaluation points sitting on a kink.
class KinkProbe {
public:
    KinkProbe();
    ~KinkProbe();
    KinkProbe(const KinkProbe&) = delete;
    KinkProbe& operator=(const KinkProbe&) = delete;

    /// Smallest distance seen so far (+inf if nothing was recorded).
    double distance() const { return distance_; }
    static bool active();
    static void note(double distance);

private:
    double distance_;
    KinkProbe* previous_;
};

/// Test hook: when enabled, convolution kernel gradients are deliberately
/// scaled by a wrong factor so gradient checks can be shown to fail.
void set_gradient_fault(bool enabled);
bool gradient_fault_enabled();

class GradientFaultGuard {
public:
    explicit GradientFaultGuard(bool enabled) : previous_(gradient_fault_enabled()) {
        set_gradient_fault(enabled);
    }
    ~GradientFaultGuard() { set_gradient_fault(previous_); }
    GradientFaultGuard(const GradientFaultGuard&) = delete;
    GradientFaultGuard& operator=(const GradientFaultGuard&) = delete;

private:
    bool previous_;
};

// Plain kernels shared by the graph ops and by callers that need no graph.
namespace kernels {

struct ConvGeometry {
    std::size_t in_channels, out_channels;
    std::size_t depth, height, width;
    std::size_t kd, kh, kw;
};

template <class T>
void conv_forward(const ConvGeometry& g, const T* input, const T* kernel, const T* bias, Padding padding,
                  T* output);

// Accumulates (+=) into the non-null gradient buffers.
template <class T>
void conv_backward(const ConvGeometry& g, const T* input, const T* kernel, const T* grad_output,
                   Padding padding, T* grad_input, T* grad_kernel, T* grad_bias);

template <class T>
void relevance_forward(const T* q, std::size_t nq, const T* k, std::size_t nk, std::size_t dim, T* out);

}  // namespace kernels

}  // namespace pansharp
