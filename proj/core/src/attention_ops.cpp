#include <cmath>
#include <limits>
#include <vector>

#include "graph_internal.hpp"

namespace pansharp {

namespace {

long reflect(long i, long n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        i = i < 0 ? -i : 2 * (n - 1) - i;
    }
    return i;
}

// Source pixel for every (centre, tap) pair, reflect-padded.
std::vector<std::size_t> unfold_sources(std::size_t h, std::size_t w, std::size_t patch) {
    const long half = static_cast<long>(patch / 2);
    std::vector<std::size_t> src(h * w * patch * patch);
    std::size_t k = 0;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t a = 0; a < patch; ++a) {
                const long sy = reflect(static_cast<long>(y + a) - half, static_cast<long>(h));
                for (std::size_t b = 0; b < patch; ++b, ++k) {
                    const long sx = reflect(static_cast<long>(x + b) - half, static_cast<long>(w));
                    src[k] = static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx);
                }
            }
        }
    }
    return src;
}

void require_odd_patch(const char* op, std::size_t patch) {
    if (patch % 2 == 0) {
        throw DimensionError(std::string(op) + ": patch size must be odd, got " + std::to_string(patch));
    }
}

}  // namespace

template <class T>
Var<T> unfold(const Var<T>& x, std::size_t patch) {
    detail::require_rank("unfold", "input", x.shape(), 3);
    require_odd_patch("unfold", patch);
    const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const std::size_t taps = patch * patch;
    const std::size_t n = h * w;
    const std::size_t dim = c * taps;
    auto src = unfold_sources(h, w, patch);

    BasicTensor<T> out(Shape{n, dim});
    auto in = x.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t t = 0; t < taps; ++t) {
                o[i * dim + ch * taps + t] = in[ch * n + src[i * taps + t]];
            }
        }
    }
    return detail::make_op<T>(std::move(out), "unfold", {x.node_ptr()},
                              [src = std::move(src), c, n, taps, dim](Node<T>& self) {
                                  auto g = self.grad->data();
                                  auto gi = self.inputs[0]->ensure_grad().data();
                                  for (std::size_t i = 0; i < n; ++i) {
                                      for (std::size_t ch = 0; ch < c; ++ch) {
                                          for (std::size_t t = 0; t < taps; ++t) {
                                              gi[ch * n + src[i * taps + t]] += g[i * dim + ch * taps + t];
                                          }
                                      }
                                  }
                              });
}

template <class T>
Var<T> fold(const Var<T>& patches, std::size_t channels, std::size_t height, std::size_t width, std::size_t patch) {
    detail::require_rank("fold", "patches", patches.shape(), 2);
    require_odd_patch("fold", patch);
    const std::size_t taps = patch * patch;
    const std::size_t n = height * width;
    const std::size_t dim = channels * taps;
    if (patches.shape()[0] != n || patches.shape()[1] != dim) {
        throw DimensionError("fold: patches shape " + shape_string(patches.shape()) + " does not match [" +
                             std::to_string(n) + "," + std::to_string(dim) + "] for " + std::to_string(channels) +
                             "x" + std::to_string(height) + "x" + std::to_string(width) + " with patch " +
                             std::to_string(patch));
    }
    const long half = static_cast<long>(patch / 2);
    // (centre, tap) -> destination pixel or -1 when the tap falls outside the image.
    std::vector<long> dest(n * taps);
    std::vector<T> coverage(n, T{0});
    for (std::size_t y = 0, k = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t a = 0; a < patch; ++a) {
                const long ty = static_cast<long>(y + a) - half;
                for (std::size_t b = 0; b < patch; ++b, ++k) {
                    const long tx = static_cast<long>(x + b) - half;
                    const bool inside = ty >= 0 && tx >= 0 && ty < static_cast<long>(height) &&
                                        tx < static_cast<long>(width);
                    dest[k] = inside ? ty * static_cast<long>(width) + tx : -1;
                    if (inside) coverage[static_cast<std::size_t>(dest[k])] += T{1};
                }
            }
        }
    }
    BasicTensor<T> out(Shape{channels, height, width});
    auto in = patches.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
            for (std::size_t t = 0; t < taps; ++t) {
                const long d = dest[i * taps + t];
                if (d >= 0) o[ch * n + static_cast<std::size_t>(d)] += in[i * dim + ch * taps + t];
            }
        }
    }
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t p = 0; p < n; ++p) o[ch * n + p] /= coverage[p];
    }
    return detail::make_op<T>(
        std::move(out), "fold", {patches.node_ptr()},
        [dest = std::move(dest), coverage = std::move(coverage), channels, n, taps, dim](Node<T>& self) {
            auto g = self.grad->data();
            auto gi = self.inputs[0]->ensure_grad().data();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t ch = 0; ch < channels; ++ch) {
                    for (std::size_t t = 0; t < taps; ++t) {
                        const long d = dest[i * taps + t];
                        if (d >= 0) {
                            const auto p = static_cast<std::size_t>(d);
                            gi[i * dim + ch * taps + t] += g[ch * n + p] / coverage[p];
                        }
                    }
                }
            }
        });
}

namespace {

// Rows scaled to unit length in double precision; returns the norms (0 marks a zero-direction row).
template <class T>
std::vector<double> normalize_rows(const T* rows, std::size_t count, std::size_t dim, std::vector<double>& unit) {
    std::vector<double> norms(count);
    unit.assign(count * dim, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        double ss = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = static_cast<double>(rows[i * dim + d]);
            ss += v * v;
        }
        const double norm = std::sqrt(ss);
        if (norm < kZeroNormThreshold) {
            norms[i] = 0.0;
            continue;
        }
        norms[i] = norm;
        for (std::size_t d = 0; d < dim; ++d) unit[i * dim + d] = static_cast<double>(rows[i * dim + d]) / norm;
    }
    return norms;
}

// unit_q [nq,dim] times unit_k^T, written as an axpy over the key index.
template <class T>
void unit_products(const std::vector<double>& unit_q, std::size_t nq, const std::vector<double>& unit_k,
                   std::size_t nk, std::size_t dim, T* out) {
    std::vector<double> kt(dim * nk);
    for (std::size_t j = 0; j < nk; ++j) {
        for (std::size_t d = 0; d < dim; ++d) kt[d * nk + j] = unit_k[j * dim + d];
    }
    std::vector<double> row(nk);
    for (std::size_t i = 0; i < nq; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        const double* q = unit_q.data() + i * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            const double qd = q[d];
            if (qd == 0.0) continue;
            const double* __restrict kr = kt.data() + d * nk;
            double* __restrict r = row.data();
            for (std::size_t j = 0; j < nk; ++j) r[j] += qd * kr[j];
        }
        for (std::size_t j = 0; j < nk; ++j) out[i * nk + j] = static_cast<T>(row[j]);
    }
}

// d(x/|x|) backprop: (g - u (u.g)) / |x|.
template <class T>
void unnormalize_grad(const std::vector<double>& unit, const std::vector<double>& norms,
                      const std::vector<double>& grad_unit, std::size_t count, std::size_t dim, T* grad_out) {
    for (std::size_t i = 0; i < count; ++i) {
        if (norms[i] == 0.0) continue;
        const double* u = unit.data() + i * dim;
        const double* g = grad_unit.data() + i * dim;
        double proj = 0.0;
        for (std::size_t d = 0; d < dim; ++d) proj += u[d] * g[d];
        for (std::size_t d = 0; d < dim; ++d) {
            grad_out[i * dim + d] += static_cast<T>((g[d] - u[d] * proj) / norms[i]);
        }
    }
}

}  // namespace

namespace kernels {

template <class T>
void relevance_forward(const T* q, std::size_t nq, const T* k, std::size_t nk, std::size_t dim, T* out) {
    std::vector<double> unit_q, unit_k;
    normalize_rows(q, nq, dim, unit_q);
    normalize_rows(k, nk, dim, unit_k);
    unit_products(unit_q, nq, unit_k, nk, dim, out);
}

template void relevance_forward<float>(const float*, std::size_t, const float*, std::size_t, std::size_t, float*);
template void relevance_forward<double>(const double*, std::size_t, const double*, std::size_t, std::size_t, double*);

}  // namespace kernels

template <class T>
Var<T> relevance(const Var<T>& q, const Var<T>& k) {
    detail::require_rank("relevance", "query patches", q.shape(), 2);
    detail::require_rank("relevance", "key patches", k.shape(), 2);
    if (q.shape()[1] != k.shape()[1]) {
        throw DimensionError("relevance: patch dimensionality differs (axis 1: " + std::to_string(q.shape()[1]) +
                             " vs " + std::to_string(k.shape()[1]) + ")");
    }
    const std::size_t nq = q.shape()[0], nk = k.shape()[0], dim = q.shape()[1];
    std::vector<double> unit_q, unit_k;
    auto norm_q = normalize_rows(q.value().data().data(), nq, dim, unit_q);
    auto norm_k = normalize_rows(k.value().data().data(), nk, dim, unit_k);
    BasicTensor<T> out(Shape{nq, nk});
    unit_products(unit_q, nq, unit_k, nk, dim, out.data().data());

    return detail::make_op<T>(
        std::move(out), "relevance", {q.node_ptr(), k.node_ptr()},
        [unit_q = std::move(unit_q), unit_k = std::move(unit_k), norm_q = std::move(norm_q),
         norm_k = std::move(norm_k), nq, nk, dim](Node<T>& self) {
            auto g = self.grad->data();
            auto& node_q = *self.inputs[0];
            auto& node_k = *self.inputs[1];
            std::vector<double> gq(node_q.requires_grad ? nq * dim : 0, 0.0);
            std::vector<double> gk(node_k.requires_grad ? nk * dim : 0, 0.0);
            // The upstream gradient is usually one entry per row (row_max), so skip zeros.
            for (std::size_t i = 0; i < nq; ++i) {
                for (std::size_t j = 0; j < nk; ++j) {
                    const double gij = static_cast<double>(g[i * nk + j]);
                    if (gij == 0.0) continue;
                    if (!gq.empty()) {
                        for (std::size_t d = 0; d < dim; ++d) gq[i * dim + d] += gij * unit_k[j * dim + d];
                    }
                    if (!gk.empty()) {
                        for (std::size_t d = 0; d < dim; ++d) gk[j * dim + d] += gij * unit_q[i * dim + d];
                    }
                }
            }
            if (!gq.empty()) unnormalize_grad(unit_q, norm_q, gq, nq, dim, node_q.ensure_grad().data().data());
            if (!gk.empty()) unnormalize_grad(unit_k, norm_k, gk, nk, dim, node_k.ensure_grad().data().data());
        });
}

template <class T>
Var<T> patch_relevance(const Var<T>& q_feat, const Var<T>& k_feat, std::size_t patch) {
    detail::require_rank("patch_relevance", "query features", q_feat.shape(), 3);
    detail::require_rank("patch_relevance", "key features", k_feat.shape(), 3);
    require_odd_patch("patch_relevance", patch);
    if (q_feat.shape()[0] != k_feat.shape()[0]) {
        throw DimensionError("patch_relevance: channel count differs (axis 0: " + std::to_string(q_feat.shape()[0]) +
                             " vs " + std::to_string(k_feat.shape()[0]) + ")");
    }
    const std::size_t channels = q_feat.shape()[0];
    const std::size_t nq = q_feat.shape()[1] * q_feat.shape()[2];
    const std::size_t nk = k_feat.shape()[1] * k_feat.shape()[2];
    const std::size_t taps = patch * patch;
    auto src_q = unfold_sources(q_feat.shape()[1], q_feat.shape()[2], patch);
    auto src_k = unfold_sources(k_feat.shape()[1], k_feat.shape()[2], patch);
    auto q = q_feat.value().data();
    auto k = k_feat.value().data();

    // gram[a][b] = sum_c q[c,a] k[c,b] over pixels a, b.
    std::vector<double> gram(nq * nk, 0.0);
    std::vector<double> k_row(nk);
    std::vector<double> sq_q(nq, 0.0), sq_k(nk, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t b = 0; b < nk; ++b) {
            k_row[b] = static_cast<double>(k[c * nk + b]);
            sq_k[b] += k_row[b] * k_row[b];
        }
        for (std::size_t a = 0; a < nq; ++a) {
            const double qa = static_cast<double>(q[c * nq + a]);
            sq_q[a] += qa * qa;
            if (qa == 0.0) continue;
            double* __restrict g = gram.data() + a * nk;
            const double* __restrict kr = k_row.data();
            for (std::size_t b = 0; b < nk; ++b) g[b] += qa * kr[b];
        }
    }
    auto patch_norms = [taps](const std::vector<std::size_t>& src, const std::vector<double>& sq, std::size_t n) {
        std::vector<double> norms(n);
        for (std::size_t i = 0; i < n; ++i) {
            double ss = 0.0;
            for (std::size_t t = 0; t < taps; ++t) ss += sq[src[i * taps + t]];
            const double norm = std::sqrt(ss);
            norms[i] = norm < kZeroNormThreshold ? 0.0 : norm;
        }
        return norms;
    };
    auto norm_q = patch_norms(src_q, sq_q, nq);
    auto norm_k = patch_norms(src_k, sq_k, nk);

    // Per tap, the key pixel of every key patch.
    std::vector<std::size_t> key_tap(taps * nk);
    for (std::size_t j = 0; j < nk; ++j) {
        for (std::size_t t = 0; t < taps; ++t) key_tap[t * nk + j] = src_k[j * taps + t];
    }
    BasicTensor<T> out(Shape{nq, nk});
    std::vector<double> row(nk);
    for (std::size_t i = 0; i < nq; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        if (norm_q[i] != 0.0) {
            for (std::size_t t = 0; t < taps; ++t) {
                const double* g = gram.data() + src_q[i * taps + t] * nk;
                const std::size_t* idx = key_tap.data() + t * nk;
                for (std::size_t j = 0; j < nk; ++j) row[j] += g[idx[j]];
            }
        }
        for (std::size_t j = 0; j < nk; ++j) {
            const double denom = norm_q[i] * norm_k[j];
            out[i * nk + j] = denom == 0.0 ? T{0} : static_cast<T>(row[j] / denom);
        }
    }

    return detail::make_op<T>(
        std::move(out), "patch_relevance", {q_feat.node_ptr(), k_feat.node_ptr()},
        [src_q = std::move(src_q), src_k = std::move(src_k), norm_q = std::move(norm_q),
         norm_k = std::move(norm_k), channels, nq, nk, taps](Node<T>& self) {
            auto g = self.grad->data();
            auto r = self.value.data();
            auto& node_q = *self.inputs[0];
            auto& node_k = *self.inputs[1];
            auto q = node_q.value.data();
            auto k = node_k.value.data();
            T* gq = node_q.requires_grad ? node_q.ensure_grad().data().data() : nullptr;
            T* gk = node_k.requires_grad ? node_k.ensure_grad().data().data() : nullptr;
            for (std::size_t i = 0; i < nq; ++i) {
                if (norm_q[i] == 0.0) continue;
                for (std::size_t j = 0; j < nk; ++j) {
                    const double gij = static_cast<double>(g[i * nk + j]);
                    if (gij == 0.0 || norm_k[j] == 0.0) continue;
                    const double rij = static_cast<double>(r[i * nk + j]);
                    const double inv_qk = 1.0 / (norm_q[i] * norm_k[j]);
                    const double inv_qq = 1.0 / (norm_q[i] * norm_q[i]);
                    const double inv_kk = 1.0 / (norm_k[j] * norm_k[j]);
                    for (std::size_t c = 0; c < channels; ++c) {
                        for (std::size_t t = 0; t < taps; ++t) {
                            const std::size_t a = c * nq + src_q[i * taps + t];
                            const std::size_t b = c * nk + src_k[j * taps + t];
                            const double qa = static_cast<double>(q[a]);
                            const double kb = static_cast<double>(k[b]);
                            if (gq) gq[a] += static_cast<T>(gij * (kb * inv_qk - rij * qa * inv_qq));
                            if (gk) gk[b] += static_cast<T>(gij * (qa * inv_qk - rij * kb * inv_kk));
                        }
                    }
                }
            }
        });
}

template <class T>
RowMaxResult<T> row_max(const Var<T>& m) {
    detail::require_rank("row_max", "matrix", m.shape(), 2);
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    auto v = m.value().data();
    std::vector<std::size_t> index(rows);
    BasicTensor<T> out(Shape{rows});
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < cols; ++j) {
            if (v[i * cols + j] > v[i * cols + best]) best = j;
        }
        index[i] = best;
        out[i] = v[i * cols + best];
        if (cols > 1 && KinkProbe::active()) {
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < cols; ++j) {
                if (j != best) gap = std::min(gap, static_cast<double>(v[i * cols + best] - v[i * cols + j]));
            }
            KinkProbe::note(gap);
        }
    }
    auto values = detail::make_op<T>(std::move(out), "row_max", {m.node_ptr()}, [index, cols](Node<T>& self) {
        auto g = self.grad->data();
        auto gi = self.inputs[0]->ensure_grad().data();
        for (std::size_t i = 0; i < index.size(); ++i) gi[i * cols + index[i]] += g[i];
    });
    return {std::move(values), std::move(index)};
}

template <class T>
Var<T> gather_rows(const Var<T>& source, const std::vector<std::size_t>& index) {
    detail::require_rank("gather_rows", "source", source.shape(), 2);
    const std::size_t rows = source.shape()[0], dim = source.shape()[1];
    if (index.empty()) {
        throw DimensionError("gather_rows: empty index");
    }
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= rows) {
            throw ContractError("gather_rows: index " + std::to_string(index[i]) + " at position " +
                                std::to_string(i) + " out of range for " + std::to_string(rows) + " rows");
        }
    }
    BasicTensor<T> out(Shape{index.size(), dim});
    auto s = source.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < index.size(); ++i) {
        std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(index[i] * dim), dim,
                    o.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    return detail::make_op<T>(std::move(out), "gather_rows", {source.node_ptr()}, [index, dim](Node<T>& self) {
        auto g = self.grad->data();
        auto gi = self.inputs[0]->ensure_grad().data();
        for (std::size_t i = 0; i < index.size(); ++i) {
            for (std::size_t d = 0; d < dim; ++d) gi[index[i] * dim + d] += g[i * dim + d];
        }
    });
}

#define PANSHARP_INSTANTIATE(T)                                                                       \
    template Var<T> unfold<T>(const Var<T>&, std::size_t);                                            \
    template Var<T> fold<T>(const Var<T>&, std::size_t, std::size_t, std::size_t, std::size_t);      \
    template Var<T> relevance<T>(const Var<T>&, const Var<T>&);                                       \
    template Var<T> patch_relevance<T>(const Var<T>&, const Var<T>&, std::size_t);                    \
    template RowMaxResult<T> row_max<T>(const Var<T>&);                                               \
    template Var<T> gather_rows<T>(const Var<T>&, const std::vector<std::size_t>&);

PANSHARP_INSTANTIATE(float)
PANSHARP_INSTANTIATE(double)

#undef PANSHARP_INSTANTIATE

}  // namespace pansharp
