#include "pansharp/reference.hpp"

#include <cmath>
#include <limits>

#include "pansharp/errors.hpp"
#include "pansharp/resample.hpp"

namespace pansharp::reference {

namespace {

// Source index for tap position i on an axis of length n; -1 means a zero tap.
long source(long i, long n, Padding padding) {
    if (i >= 0 && i < n) return i;
    if (padding == Padding::zero) return -1;
    if (n == 1) return 0;
    const long period = 2 * (n - 1);
    long m = ((i % period) + period) % period;
    return m < n ? m : period - m;
}

long clamp_edge(long i, long n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace

Tensor64 conv2d(const Tensor64& input, const Tensor64& kernel, const Tensor64& bias, Padding padding) {
    const long cin = long(input.dim(0)), h = long(input.dim(1)), w = long(input.dim(2));
    const long cout = long(kernel.dim(0)), kh = long(kernel.dim(2)), kw = long(kernel.dim(3));
    Tensor64 out(Shape{std::size_t(cout), std::size_t(h), std::size_t(w)});
    for (long co = 0; co < cout; ++co)
        for (long y = 0; y < h; ++y)
            for (long x = 0; x < w; ++x) {
                double acc = bias[std::size_t(co)];
                for (long ci = 0; ci < cin; ++ci)
                    for (long a = 0; a < kh; ++a)
                        for (long b = 0; b < kw; ++b) {
                            const long sy = source(y + a - kh / 2, h, padding);
                            const long sx = source(x + b - kw / 2, w, padding);
                            if (sy < 0 || sx < 0) continue;
                            acc += kernel[std::size_t(((co * cin + ci) * kh + a) * kw + b)] *
                                   input[std::size_t((ci * h + sy) * w + sx)];
                        }
                out[std::size_t((co * h + y) * w + x)] = acc;
            }
    return out;
}

Tensor64 conv3d(const Tensor64& input, const Tensor64& kernel, const Tensor64& bias, Padding padding) {
    const long cin = long(input.dim(0)), d = long(input.dim(1)), h = long(input.dim(2)), w = long(input.dim(3));
    const long cout = long(kernel.dim(0)), kd = long(kernel.dim(2)), kh = long(kernel.dim(3)), kw = long(kernel.dim(4));
    Tensor64 out(Shape{std::size_t(cout), std::size_t(d), std::size_t(h), std::size_t(w)});
    for (long co = 0; co < cout; ++co)
        for (long z = 0; z < d; ++z)
            for (long y = 0; y < h; ++y)
                for (long x = 0; x < w; ++x) {
                    double acc = bias[std::size_t(co)];
                    for (long ci = 0; ci < cin; ++ci)
                        for (long a = 0; a < kd; ++a)
                            for (long b = 0; b < kh; ++b)
                                for (long c = 0; c < kw; ++c) {
                                    const long sz = source(z + a - kd / 2, d, padding);
                                    const long sy = source(y + b - kh / 2, h, padding);
                                    const long sx = source(x + c - kw / 2, w, padding);
                                    if (sz < 0 || sy < 0 || sx < 0) continue;
                                    acc += kernel[std::size_t((((co * cin + ci) * kd + a) * kh + b) * kw + c)] *
                                           input[std::size_t(((ci * d + sz) * h + sy) * w + sx)];
                                }
                    out[std::size_t(((co * d + z) * h + y) * w + x)] = acc;
                }
    return out;
}

RasterVolume upsample(const RasterVolume& img, std::size_t scale) {
    const double s = double(scale);
    RasterVolume out(img.width * scale, img.height * scale, img.bands);
    for (std::size_t l = 0; l < img.bands; ++l)
        for (std::size_t oy = 0; oy < out.height; ++oy)
            for (std::size_t ox = 0; ox < out.width; ++ox) {
                const double u = (double(ox) + 0.5) / s - 0.5;
                const double v = (double(oy) + 0.5) / s - 0.5;
                const long bx = long(std::floor(u)), by = long(std::floor(v));
                double acc = 0.0;
                for (long j = by - 1; j <= by + 2; ++j)
                    for (long i = bx - 1; i <= bx + 2; ++i) {
                        const double wgt = cubic_kernel(u - double(i)) * cubic_kernel(v - double(j));
                        acc += wgt * img.at(l, std::size_t(clamp_edge(j, long(img.height))),
                                            std::size_t(clamp_edge(i, long(img.width))));
                    }
                out.at(l, oy, ox) = float(acc);
            }
    return out;
}

RasterVolume downsample(const RasterVolume& img, std::size_t scale) {
    const double s = double(scale);
    const long reach = long(2 * scale) + 1;
    RasterVolume out(img.width / scale, img.height / scale, img.bands);
    for (std::size_t l = 0; l < img.bands; ++l)
        for (std::size_t oy = 0; oy < out.height; ++oy)
            for (std::size_t ox = 0; ox < out.width; ++ox) {
                const double u = (double(ox) + 0.5) * s - 0.5;
                const double v = (double(oy) + 0.5) * s - 0.5;
                double acc = 0.0, total = 0.0;
                for (long j = long(v) - reach; j <= long(v) + reach; ++j)
                    for (long i = long(u) - reach; i <= long(u) + reach; ++i) {
                        const double wgt = cubic_kernel((u - double(i)) / s) * cubic_kernel((v - double(j)) / s);
                        acc += wgt * img.at(l, std::size_t(clamp_edge(j, long(img.height))),
                                            std::size_t(clamp_edge(i, long(img.width))));
                        total += wgt;
                    }
                out.at(l, oy, ox) = float(acc / total);
            }
    return out;
}

Tensor64 unfold(const Tensor64& x, std::size_t patch) {
    const long c = long(x.dim(0)), h = long(x.dim(1)), w = long(x.dim(2)), p = long(patch);
    Tensor64 out(Shape{std::size_t(h * w), std::size_t(c * p * p)});
    for (long y = 0; y < h; ++y)
        for (long xx = 0; xx < w; ++xx)
            for (long ch = 0; ch < c; ++ch)
                for (long a = 0; a < p; ++a)
                    for (long b = 0; b < p; ++b) {
                        const long sy = source(y + a - p / 2, h, Padding::reflect);
                        const long sx = source(xx + b - p / 2, w, Padding::reflect);
                        out[std::size_t((y * w + xx) * c * p * p + (ch * p + a) * p + b)] =
                            x[std::size_t((ch * h + sy) * w + sx)];
                    }
    return out;
}

Tensor64 fold(const Tensor64& patches, std::size_t channels, std::size_t height, std::size_t width,
              std::size_t patch) {
    const long c = long(channels), h = long(height), w = long(width), p = long(patch);
    Tensor64 sum(Shape{channels, height, width}), count(Shape{channels, height, width});
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x)
            for (long ch = 0; ch < c; ++ch)
                for (long a = 0; a < p; ++a)
                    for (long b = 0; b < p; ++b) {
                        const long ty = y + a - p / 2, tx = x + b - p / 2;
                        if (ty < 0 || ty >= h || tx < 0 || tx >= w) continue;
                        const auto dst = std::size_t((ch * h + ty) * w + tx);
                        sum[dst] += patches[std::size_t((y * w + x) * c * p * p + (ch * p + a) * p + b)];
                        count[dst] += 1.0;
                    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= count[i];
    return sum;
}

Tensor64 relevance(const Tensor64& q, const Tensor64& k) {
    const std::size_t nq = q.dim(0), nk = k.dim(0), d = q.dim(1);
    if (k.dim(1) != d) throw DimensionError("reference relevance: patch lengths differ");
    Tensor64 r(Shape{nq, nk});
    for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
            double dot = 0, qq = 0, kk = 0;
            for (std::size_t t = 0; t < d; ++t) {
                dot += q[i * d + t] * k[j * d + t];
                qq += q[i * d + t] * q[i * d + t];
                kk += k[j * d + t] * k[j * d + t];
            }
            const double nqi = std::sqrt(qq), nkj = std::sqrt(kk);
            r[i * nk + j] = (nqi < kZeroNormThreshold || nkj < kZeroNormThreshold) ? 0.0 : dot / (nqi * nkj);
        }
    return r;
}

std::vector<std::size_t> argmax_rows(const Tensor64& m) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.dim(0); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < m.dim(1); ++j) {
            if (m[i * m.dim(1) + j] > m[i * m.dim(1) + best]) best = j;
        }
        out.push_back(best);
    }
    return out;
}

std::vector<double> max_rows(const Tensor64& m) {
    std::vector<double> out;
    for (auto j : argmax_rows(m)) out.push_back(m[out.size() * m.dim(1) + j]);
    return out;
}

namespace {

double mse(const RasterVolume& a, const RasterVolume& b, std::size_t l) {
    double acc = 0.0;
    for (std::size_t y = 0; y < a.height; ++y)
        for (std::size_t x = 0; x < a.width; ++x) {
            const double d = double(a.at(l, y, x)) - double(b.at(l, y, x));
            acc += d * d;
        }
    return acc / double(a.plane_size());
}

double band_mean(const RasterVolume& a, std::size_t l) {
    double acc = 0.0;
    for (std::size_t y = 0; y < a.height; ++y)
        for (std::size_t x = 0; x < a.width; ++x) acc += a.at(l, y, x);
    return acc / double(a.plane_size());
}

}  // namespace

double psnr(const RasterVolume& pred, const RasterVolume& gt) {
    double acc = 0.0;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        const double e = mse(pred, gt, l);
        if (e == 0.0) return std::numeric_limits<double>::infinity();
        acc += -10.0 * std::log10(e);
    }
    return acc / double(gt.bands);
}

double ssim(const RasterVolume& pred, const RasterVolume& gt, const SsimParams& p) {
    const long n = long(p.window), half = n / 2;
    const double c1 = std::pow(p.k1 * p.dynamic_range, 2), c2 = std::pow(p.k2 * p.dynamic_range, 2), c3 = c2 / 2;
    double band_total = 0.0;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        double sum = 0.0;
        long windows = 0;
        for (long y0 = 0; y0 + n <= long(gt.height); ++y0)
            for (long x0 = 0; x0 + n <= long(gt.width); ++x0) {
                double wsum = 0.0;
                for (long a = 0; a < n; ++a)
                    for (long b = 0; b < n; ++b)
                        wsum += std::exp(-double((a - half) * (a - half) + (b - half) * (b - half)) /
                                         (2 * p.sigma * p.sigma));
                auto weight = [&](long a, long b) {
                    return std::exp(-double((a - half) * (a - half) + (b - half) * (b - half)) /
                                    (2 * p.sigma * p.sigma)) /
                           wsum;
                };
                double mx = 0, my = 0;
                for (long a = 0; a < n; ++a)
                    for (long b = 0; b < n; ++b) {
                        mx += weight(a, b) * pred.at(l, std::size_t(y0 + a), std::size_t(x0 + b));
                        my += weight(a, b) * gt.at(l, std::size_t(y0 + a), std::size_t(x0 + b));
                    }
                double vx = 0, vy = 0, cxy = 0;
                for (long a = 0; a < n; ++a)
                    for (long b = 0; b < n; ++b) {
                        const double dx = pred.at(l, std::size_t(y0 + a), std::size_t(x0 + b)) - mx;
                        const double dy = gt.at(l, std::size_t(y0 + a), std::size_t(x0 + b)) - my;
                        vx += weight(a, b) * dx * dx;
                        vy += weight(a, b) * dy * dy;
                        cxy += weight(a, b) * dx * dy;
                    }
                const double sx = std::sqrt(vx), sy = std::sqrt(vy);
                const double lum = (2 * mx * my + c1) / (mx * mx + my * my + c1);
                const double con = (2 * sx * sy + c2) / (vx + vy + c2);
                const double str = (cxy + c3) / (sx * sy + c3);
                sum += lum * con * str;
                ++windows;
            }
        band_total += sum / double(windows);
    }
    return band_total / double(gt.bands);
}

double cc(const RasterVolume& pred, const RasterVolume& gt) {
    double total = 0.0;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        const double ma = band_mean(pred, l), mb = band_mean(gt, l);
        double num = 0, da = 0, db = 0;
        for (std::size_t y = 0; y < gt.height; ++y)
            for (std::size_t x = 0; x < gt.width; ++x) {
                const double a = pred.at(l, y, x) - ma, b = gt.at(l, y, x) - mb;
                num += a * b;
                da += a * a;
                db += b * b;
            }
        if (db == 0.0) {
            bool same = true;
            for (std::size_t y = 0; y < gt.height; ++y)
                for (std::size_t x = 0; x < gt.width; ++x) same = same && pred.at(l, y, x) == gt.at(l, y, x);
            total += same ? 1.0 : 0.0;
        } else if (da > 0.0) {
            total += num / (std::sqrt(da) * std::sqrt(db));
        }
    }
    return total / double(gt.bands);
}

double sam(const RasterVolume& pred, const RasterVolume& gt) {
    double total = 0.0;
    for (std::size_t y = 0; y < gt.height; ++y)
        for (std::size_t x = 0; x < gt.width; ++x) {
            double dot = 0, na = 0, nb = 0;
            for (std::size_t l = 0; l < gt.bands; ++l) {
                dot += double(pred.at(l, y, x)) * gt.at(l, y, x);
                na += double(pred.at(l, y, x)) * pred.at(l, y, x);
                nb += double(gt.at(l, y, x)) * gt.at(l, y, x);
            }
            if (std::sqrt(na) < 1e-12 || std::sqrt(nb) < 1e-12) continue;
            double c = dot / std::sqrt(na * nb);
            c = c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
            total += std::acos(c);
        }
    return total / double(gt.plane_size());
}

double ergas(const RasterVolume& pred, const RasterVolume& gt, std::size_t scale) {
    double acc = 0.0;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        const double ratio = std::sqrt(mse(pred, gt, l)) / band_mean(gt, l);
        acc += ratio * ratio;
    }
    return 100.0 / double(scale) * std::sqrt(acc / double(gt.bands));
}

}  // namespace pansharp::reference
