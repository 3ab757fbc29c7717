#include "pansharp/autodiff.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "graph_internal.hpp"

namespace pansharp {

namespace {
std::atomic<bool> g_gradient_fault{false};
thread_local bool g_recording = true;
thread_local KinkProbe* g_probe = nullptr;
}  // namespace

KinkProbe::KinkProbe() : distance_(std::numeric_limits<double>::infinity()), previous_(g_probe) { g_probe = this; }
KinkProbe::~KinkProbe() { g_probe = previous_; }

bool KinkProbe::active() { return g_probe != nullptr; }

void KinkProbe::note(double distance) {
    for (KinkProbe* p = g_probe; p; p = p->previous_) p->distance_ = std::min(p->distance_, distance);
}

bool grad_recording_enabled() { return g_recording; }

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }

void set_gradient_fault(bool enabled) { g_gradient_fault.store(enabled); }
bool gradient_fault_enabled() { return g_gradient_fault.load(); }

template <class T>
void backward(const Var<T>& loss) {
    if (!loss.defined()) {
        throw ContractError("backward: undefined loss");
    }
    if (loss.value().size() != 1) {
        throw ContractError("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
    }
    if (!loss.requires_grad()) {
        return;
    }

    // Iterative post-order DFS; each node visited once.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    visited.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node<T>* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node<T>* node : order) {
        if (!node->is_leaf) {
            node->grad.reset();
        }
    }
    if (loss.node()->is_leaf) {
        loss.node()->ensure_grad()[0] += T{1};
        return;
    }
    loss.node()->ensure_grad()[0] = T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* node = *it;
        if (node->is_leaf || !node->grad || !node->backward_fn) {
            continue;
        }
        node->backward_fn(*node);
    }
}

template <class T>
Var<T> relu(const Var<T>& x) {
    BasicTensor<T> out(x.shape());
    auto in = x.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < in.size(); ++i) {
        o[i] = in[i] > T{0} ? in[i] : T{0};
    }
    if (g_probe) {
        for (auto v : in) KinkProbe::note(std::abs(static_cast<double>(v)));
    }
    return detail::make_op<T>(std::move(out), "relu", {x.node_ptr()}, [](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto g = self.grad->data();
        auto v = in.value.data();
        auto gi = in.ensure_grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (v[i] > T{0}) gi[i] += g[i];
        }
    });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    detail::require_same_shape("add", a.shape(), b.shape());
    BasicTensor<T> out(a.shape());
    auto x = a.value().data();
    auto y = b.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
    return detail::make_op<T>(std::move(out), "add", {a.node_ptr(), b.node_ptr()}, [](Node<T>& self) {
        auto g = self.grad->data();
        for (auto& in : self.inputs) {
            if (!in->requires_grad) continue;
            auto gi = in->ensure_grad().data();
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
    });
}

template <class T>
Var<T> scalar_mul(const Var<T>& a, T factor) {
    BasicTensor<T> out(a.shape());
    auto x = a.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * factor;
    return detail::make_op<T>(std::move(out), "scalar_mul", {a.node_ptr()}, [factor](Node<T>& self) {
        auto g = self.grad->data();
        auto gi = self.inputs[0]->ensure_grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * factor;
    });
}

template <class T>
Var<T> elementwise_mul(const Var<T>& a, const Var<T>& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    bool broadcast = false;
    if (sa != sb) {
        Shape expect = sa;
        expect[0] = 1;
        if (sb != expect) {
            detail::require_same_shape("elementwise_mul", sa, sb);
        }
        broadcast = true;
    }
    const std::size_t channels = broadcast ? sa[0] : 1;
    const std::size_t inner = broadcast ? b.value().size() : a.value().size();

    BasicTensor<T> out(sa);
    auto x = a.value().data();
    auto y = b.value().data();
    auto o = out.data();
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < inner; ++i) o[c * inner + i] = x[c * inner + i] * y[i];
    }
    return detail::make_op<T>(
        std::move(out), "elementwise_mul", {a.node_ptr(), b.node_ptr()}, [channels, inner](Node<T>& self) {
            auto g = self.grad->data();
            auto& na = *self.inputs[0];
            auto& nb = *self.inputs[1];
            auto x = na.value.data();
            auto y = nb.value.data();
            if (na.requires_grad) {
                auto ga = na.ensure_grad().data();
                for (std::size_t c = 0; c < channels; ++c) {
                    for (std::size_t i = 0; i < inner; ++i) ga[c * inner + i] += g[c * inner + i] * y[i];
                }
            }
            if (nb.requires_grad) {
                auto gb = nb.ensure_grad().data();
                for (std::size_t c = 0; c < channels; ++c) {
                    for (std::size_t i = 0; i < inner; ++i) gb[i] += g[c * inner + i] * x[c * inner + i];
                }
            }
        });
}

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
    if (parts.empty()) {
        throw DimensionError("concat_channels: no inputs");
    }
    Shape shape = parts.front().shape();
    std::size_t channels = 0;
    for (const auto& p : parts) {
        Shape tail = p.shape();
        if (tail.size() != shape.size()) {
            detail::require_same_shape("concat_channels", shape, tail);
        }
        tail[0] = shape[0];
        detail::require_same_shape("concat_channels", shape, tail);
        channels += p.shape()[0];
    }
    shape[0] = channels;
    BasicTensor<T> out(shape);
    std::vector<std::shared_ptr<Node<T>>> inputs;
    std::size_t offset = 0;
    for (const auto& p : parts) {
        auto src = p.value().data();
        std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
        offset += src.size();
        inputs.push_back(p.node_ptr());
    }
    return detail::make_op<T>(std::move(out), "concat_channels", std::move(inputs), [](Node<T>& self) {
        auto g = self.grad->data();
        std::size_t offset = 0;
        for (auto& in : self.inputs) {
            const std::size_t n = in->value.size();
            if (in->requires_grad) {
                auto gi = in->ensure_grad().data();
                for (std::size_t i = 0; i < n; ++i) gi[i] += g[offset + i];
            }
            offset += n;
        }
    });
}

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
    if (shape_size(shape) != x.value().size()) {
        throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    return detail::make_op<T>(x.value().reshaped(std::move(shape)), "reshape", {x.node_ptr()}, [](Node<T>& self) {
        auto g = self.grad->data();
        auto gi = self.inputs[0]->ensure_grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    });
}

template <class T>
Var<T> slice_channels(const Var<T>& x, std::size_t first, std::size_t count) {
    const Shape& in_shape = x.shape();
    if (count == 0 || first + count > in_shape[0]) {
        throw DimensionError("slice_channels: range [" + std::to_string(first) + "," + std::to_string(first + count) +
                             ") outside axis 0 of " + shape_string(in_shape));
    }
    Shape shape = in_shape;
    shape[0] = count;
    const std::size_t inner = x.value().size() / in_shape[0];
    auto src = x.value().data().subspan(first * inner, count * inner);
    BasicTensor<T> out(shape, std::vector<T>(src.begin(), src.end()));
    return detail::make_op<T>(std::move(out), "slice_channels", {x.node_ptr()},
                              [offset = first * inner](Node<T>& self) {
                                  auto g = self.grad->data();
                                  auto gi = self.inputs[0]->ensure_grad().data();
                                  for (std::size_t i = 0; i < g.size(); ++i) gi[offset + i] += g[i];
                              });
}

template <class T>
Var<T> sum(const Var<T>& x) {
    double total = 0.0;
    for (T v : x.value().data()) total += static_cast<double>(v);
    return detail::make_op<T>(BasicTensor<T>::scalar(static_cast<T>(total)), "sum", {x.node_ptr()},
                              [](Node<T>& self) {
                                  const T g = (*self.grad)[0];
                                  auto gi = self.inputs[0]->ensure_grad().data();
                                  for (auto& v : gi) v += g;
                              });
}

template <class T>
Var<T> l1_loss(const Var<T>& pred, const Var<T>& target) {
    detail::require_same_shape("l1_loss", pred.shape(), target.shape());
    auto p = pred.value().data();
    auto t = target.value().data();
    double total = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
        total += d;
        nearest = std::min(nearest, d);
    }
    if (g_probe) KinkProbe::note(nearest);
    const double n = static_cast<double>(p.size());
    return detail::make_op<T>(
        BasicTensor<T>::scalar(static_cast<T>(total / n)), "l1_loss", {pred.node_ptr(), target.node_ptr()},
        [n](Node<T>& self) {
            const T g = static_cast<T>(static_cast<double>((*self.grad)[0]) / n);
            auto& np = *self.inputs[0];
            auto& nt = *self.inputs[1];
            auto p = np.value.data();
            auto t = nt.value.data();
            auto sign = [](T d) { return d > T{0} ? T{1} : (d < T{0} ? T{-1} : T{0}); };
            if (np.requires_grad) {
                auto gp = np.ensure_grad().data();
                for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * sign(p[i] - t[i]);
            }
            if (nt.requires_grad) {
                auto gt = nt.ensure_grad().data();
                for (std::size_t i = 0; i < p.size(); ++i) gt[i] -= g * sign(p[i] - t[i]);
            }
        });
}

template <class T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
    detail::require_same_shape("mse_loss", pred.shape(), target.shape());
    auto p = pred.value().data();
    auto t = target.value().data();
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
        total += d * d;
    }
    const double n = static_cast<double>(p.size());
    return detail::make_op<T>(
        BasicTensor<T>::scalar(static_cast<T>(total / n)), "mse_loss", {pred.node_ptr(), target.node_ptr()},
        [n](Node<T>& self) {
            const T g = static_cast<T>(2.0 * static_cast<double>((*self.grad)[0]) / n);
            auto& np = *self.inputs[0];
            auto& nt = *self.inputs[1];
            auto p = np.value.data();
            auto t = nt.value.data();
            if (np.requires_grad) {
                auto gp = np.ensure_grad().data();
                for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * (p[i] - t[i]);
            }
            if (nt.requires_grad) {
                auto gt = nt.ensure_grad().data();
                for (std::size_t i = 0; i < p.size(); ++i) gt[i] -= g * (p[i] - t[i]);
            }
        });
}

#define PANSHARP_INSTANTIATE(T)                                                   \
    template void backward<T>(const Var<T>&);                                     \
    template Var<T> relu<T>(const Var<T>&);                                       \
    template Var<T> add<T>(const Var<T>&, const Var<T>&);                         \
    template Var<T> scalar_mul<T>(const Var<T>&, T);                              \
    template Var<T> elementwise_mul<T>(const Var<T>&, const Var<T>&);             \
    template Var<T> concat_channels<T>(const std::vector<Var<T>>&);               \
    template Var<T> reshape<T>(const Var<T>&, Shape);                             \
    template Var<T> slice_channels<T>(const Var<T>&, std::size_t, std::size_t);   \
    template Var<T> sum<T>(const Var<T>&);                                        \
    template Var<T> l1_loss<T>(const Var<T>&, const Var<T>&);                     \
    template Var<T> mse_loss<T>(const Var<T>&, const Var<T>&);

PANSHARP_INSTANTIATE(float)
PANSHARP_INSTANTIATE(double)

#undef PANSHARP_INSTANTIATE

}  // namespace pansharp
