#include <cstring>
#include <vector>

#include "graph_internal.hpp"

namespace pansharp {

namespace {

// Maps a (possibly out-of-range) coordinate to a source index, or -1 for a zero tap.
long pad_index(long i, long n, Padding padding) {
    if (i >= 0 && i < n) return i;
    if (padding == Padding::zero) return -1;
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        i = i < 0 ? -i : 2 * (n - 1) - i;
    }
    return i;
}

// source[offset][pos] for one axis: kernel offset -> per-output-position source index.
std::vector<long> axis_map(std::size_t n, std::size_t k, Padding padding) {
    const long half = static_cast<long>(k / 2);
    std::vector<long> map(k * n);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t p = 0; p < n; ++p) {
            map[a * n + p] = pad_index(static_cast<long>(p) + static_cast<long>(a) - half, static_cast<long>(n), padding);
        }
    }
    return map;
}

struct ColumnLayout {
    std::vector<long> md, mh, mw;
};

ColumnLayout make_layout(const kernels::ConvGeometry& g, Padding padding) {
    return {axis_map(g.depth, g.kd, padding), axis_map(g.height, g.kh, padding), axis_map(g.width, g.kw, padding)};
}

// Row r = (ci, a, b, c) of the column matrix, one entry per output voxel.
template <class T, class Visit>
void for_each_column_row(const kernels::ConvGeometry& g, const ColumnLayout& lay, Visit&& visit) {
    const std::size_t plane = g.height * g.width;
    std::size_t r = 0;
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
        for (std::size_t a = 0; a < g.kd; ++a) {
            for (std::size_t b = 0; b < g.kh; ++b) {
                for (std::size_t c = 0; c < g.kw; ++c, ++r) {
                    for (std::size_t z = 0; z < g.depth; ++z) {
                        const long sz = lay.md[a * g.depth + z];
                        for (std::size_t y = 0; y < g.height; ++y) {
                            const long sy = lay.mh[b * g.height + y];
                            const std::size_t out_base = z * plane + y * g.width;
                            for (std::size_t x = 0; x < g.width; ++x) {
                                const long sx = lay.mw[c * g.width + x];
                                const long src = (sz < 0 || sy < 0 || sx < 0)
                                                     ? -1
                                                     : static_cast<long>(ci * g.depth * plane) +
                                                           sz * static_cast<long>(plane) +
                                                           sy * static_cast<long>(g.width) + sx;
                                visit(r, out_base + x, src);
                            }
                        }
                    }
                }
            }
        }
    }
}

template <class T>
void validate_geometry(const kernels::ConvGeometry& g) {
    if (g.kd % 2 == 0 || g.kh % 2 == 0 || g.kw % 2 == 0) {
        throw DimensionError("conv: kernel extents must be odd, got " + std::to_string(g.kd) + "x" +
                             std::to_string(g.kh) + "x" + std::to_string(g.kw));
    }
}

}  // namespace

namespace kernels {

template <class T>
void conv_forward(const ConvGeometry& g, const T* input, const T* kernel, const T* bias, Padding padding,
                  T* output) {
    validate_geometry<T>(g);
    const std::size_t spatial = g.depth * g.height * g.width;
    const std::size_t taps = g.in_channels * g.kd * g.kh * g.kw;
    const ColumnLayout lay = make_layout(g, padding);

    std::vector<T> col(taps * spatial);
    for_each_column_row<T>(g, lay, [&](std::size_t r, std::size_t s, long src) {
        col[r * spatial + s] = src < 0 ? T{0} : input[src];
    });

    for (std::size_t co = 0; co < g.out_channels; ++co) {
        T* __restrict out = output + co * spatial;
        const T b = bias ? bias[co] : T{0};
        for (std::size_t s = 0; s < spatial; ++s) out[s] = b;
        const T* w = kernel + co * taps;
        for (std::size_t r = 0; r < taps; ++r) {
            const T wr = w[r];
            if (wr == T{0}) continue;
            const T* __restrict c = col.data() + r * spatial;
            for (std::size_t s = 0; s < spatial; ++s) out[s] += wr * c[s];
        }
    }
}

template <class T>
void conv_backward(const ConvGeometry& g, const T* input, const T* kernel, const T* grad_output, Padding padding,
                   T* grad_input, T* grad_kernel, T* grad_bias) {
    validate_geometry<T>(g);
    const std::size_t spatial = g.depth * g.height * g.width;
    const std::size_t taps = g.in_channels * g.kd * g.kh * g.kw;
    const ColumnLayout lay = make_layout(g, padding);

    if (grad_bias) {
        for (std::size_t co = 0; co < g.out_channels; ++co) {
            const T* go = grad_output + co * spatial;
            T acc{0};
            for (std::size_t s = 0; s < spatial; ++s) acc += go[s];
            grad_bias[co] += acc;
        }
    }

    if (grad_kernel) {
        // Transposed columns [spatial, taps] so the reduction over voxels becomes an axpy over taps.
        std::vector<T> col_t(spatial * taps);
        for_each_column_row<T>(g, lay, [&](std::size_t r, std::size_t s, long src) {
            col_t[s * taps + r] = src < 0 ? T{0} : input[src];
        });
        std::vector<T> acc(g.out_channels * taps, T{0});
        for (std::size_t s = 0; s < spatial; ++s) {
            const T* __restrict c = col_t.data() + s * taps;
            for (std::size_t co = 0; co < g.out_channels; ++co) {
                const T go = grad_output[co * spatial + s];
                if (go == T{0}) continue;
                T* __restrict a = acc.data() + co * taps;
                for (std::size_t r = 0; r < taps; ++r) a[r] += go * c[r];
            }
        }
        const T scale = gradient_fault_enabled() ? T(1.05) : T{1};
        for (std::size_t i = 0; i < acc.size(); ++i) grad_kernel[i] += scale * acc[i];
    }

    if (grad_input) {
        std::vector<T> dcol(taps * spatial, T{0});
        for (std::size_t r = 0; r < taps; ++r) {
            T* __restrict d = dcol.data() + r * spatial;
            for (std::size_t co = 0; co < g.out_channels; ++co) {
                const T w = kernel[co * taps + r];
                if (w == T{0}) continue;
                const T* __restrict go = grad_output + co * spatial;
                for (std::size_t s = 0; s < spatial; ++s) d[s] += w * go[s];
            }
        }
        for_each_column_row<T>(g, lay, [&](std::size_t r, std::size_t s, long src) {
            if (src >= 0) grad_input[src] += dcol[r * spatial + s];
        });
    }
}

template void conv_forward<float>(const ConvGeometry&, const float*, const float*, const float*, Padding, float*);
template void conv_forward<double>(const ConvGeometry&, const double*, const double*, const double*, Padding,
                                   double*);
template void conv_backward<float>(const ConvGeometry&, const float*, const float*, const float*, Padding, float*,
                                   float*, float*);
template void conv_backward<double>(const ConvGeometry&, const double*, const double*, const double*, Padding,
                                    double*, double*, double*);

}  // namespace kernels

namespace {

template <class T>
Var<T> conv_op(const char* name, const Var<T>& input, const Var<T>& kernel, const Var<T>& bias, Padding padding,
               const kernels::ConvGeometry& g, Shape out_shape) {
    if (bias.value().rank() != 1 || bias.value().size() != g.out_channels) {
        throw DimensionError(std::string(name) + ": bias shape " + shape_string(bias.shape()) +
                             " does not match output channels (axis 0 of kernel) " + std::to_string(g.out_channels));
    }
    BasicTensor<T> out(std::move(out_shape));
    kernels::conv_forward(g, input.value().data().data(), kernel.value().data().data(),
                          bias.value().data().data(), padding, out.data().data());
    return detail::make_op<T>(std::move(out), name, {input.node_ptr(), kernel.node_ptr(), bias.node_ptr()},
                              [g, padding](Node<T>& self) {
                                  auto& ni = *self.inputs[0];
                                  auto& nk = *self.inputs[1];
                                  auto& nb = *self.inputs[2];
                                  kernels::conv_backward(
                                      g, ni.value.data().data(), nk.value.data().data(), self.grad->data().data(),
                                      padding, ni.requires_grad ? ni.ensure_grad().data().data() : nullptr,
                                      nk.requires_grad ? nk.ensure_grad().data().data() : nullptr,
                                      nb.requires_grad ? nb.ensure_grad().data().data() : nullptr);
                              });
}

}  // namespace

template <class T>
Var<T> conv2d(const Var<T>& input, const Var<T>& kernel, const Var<T>& bias, Padding padding) {
    detail::require_rank("conv2d", "input", input.shape(), 3);
    detail::require_rank("conv2d", "kernel", kernel.shape(), 4);
    const Shape& si = input.shape();
    const Shape& sk = kernel.shape();
    if (sk[1] != si[0]) {
        throw DimensionError("conv2d: kernel axis 1 (in channels) = " + std::to_string(sk[1]) +
                             " but input axis 0 (channels) = " + std::to_string(si[0]));
    }
    const kernels::ConvGeometry g{si[0], sk[0], 1, si[1], si[2], 1, sk[2], sk[3]};
    return conv_op("conv2d", input, kernel, bias, padding, g, Shape{sk[0], si[1], si[2]});
}

template <class T>
Var<T> conv3d(const Var<T>& input, const Var<T>& kernel, const Var<T>& bias, Padding padding) {
    detail::require_rank("conv3d", "input", input.shape(), 4);
    detail::require_rank("conv3d", "kernel", kernel.shape(), 5);
    const Shape& si = input.shape();
    const Shape& sk = kernel.shape();
    if (sk[1] != si[0]) {
        throw DimensionError("conv3d: kernel axis 1 (in channels) = " + std::to_string(sk[1]) +
                             " but input axis 0 (channels) = " + std::to_string(si[0]));
    }
    const kernels::ConvGeometry g{si[0], sk[0], si[1], si[2], si[3], sk[2], sk[3], sk[4]};
    return conv_op("conv3d", input, kernel, bias, padding, g, Shape{sk[0], si[1], si[2], si[3]});
}

template Var<float> conv2d<float>(const Var<float>&, const Var<float>&, const Var<float>&, Padding);
template Var<double> conv2d<double>(const Var<double>&, const Var<double>&, const Var<double>&, Padding);
template Var<float> conv3d<float>(const Var<float>&, const Var<float>&, const Var<float>&, Padding);
template Var<double> conv3d<double>(const Var<double>&, const Var<double>&, const Var<double>&, Padding);

}  // namespace pansharp
