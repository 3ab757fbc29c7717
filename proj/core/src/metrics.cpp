#include "pansharp/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "pansharp/errors.hpp"

namespace pansharp {

namespace {

void require_same(const char* metric, const RasterVolume& pred, const RasterVolume& gt) {
    if (pred.width != gt.width || pred.height != gt.height || pred.bands != gt.bands) {
        throw DimensionError(std::string(metric) + ": prediction " + std::to_string(pred.width) + "x" +
                             std::to_string(pred.height) + "x" + std::to_string(pred.bands) + " vs ground truth " +
                             std::to_string(gt.width) + "x" + std::to_string(gt.height) + "x" +
                             std::to_string(gt.bands));
    }
}

double band_mse(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> gaussian_window(const SsimParams& p) {
    std::vector<double> w(p.window * p.window);
    const double c = static_cast<double>(p.window / 2);
    double total = 0.0;
    for (std::size_t y = 0; y < p.window; ++y) {
        for (std::size_t x = 0; x < p.window; ++x) {
            const double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
            w[y * p.window + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
            total += w[y * p.window + x];
        }
    }
    for (auto& v : w) v /= total;
    return w;
}

double band_ssim(std::span<const float> a, std::span<const float> b, std::size_t width, std::size_t height,
                 const std::vector<double>& win, const SsimParams& p) {
    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    const std::size_t n = p.window;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t y0 = 0; y0 + n <= height; ++y0) {
        for (std::size_t x0 = 0; x0 + n <= width; ++x0) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t y = 0; y < n; ++y) {
                const std::size_t row = (y0 + y) * width + x0;
                for (std::size_t x = 0; x < n; ++x) {
                    const double w = win[y * n + x];
                    const double u = a[row + x], v = b[row + x];
                    mx += w * u;
                    my += w * v;
                    sxx += w * u * u;
                    syy += w * v * v;
                    sxy += w * u * v;
                }
            }
            const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
            total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) throw DataError("metrics report: bad number '" + s + "'");
    return v;
}

}  // namespace

std::vector<double> psnr_per_band(const RasterVolume& pred, const RasterVolume& gt) {
    require_same("psnr", pred, gt);
    std::vector<double> out;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        const double mse = band_mse(pred.band(l), gt.band(l));
        out.push_back(mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse));
    }
    return out;
}

double psnr(const RasterVolume& pred, const RasterVolume& gt) { return mean(psnr_per_band(pred, gt)); }

std::vector<double> ssim_per_band(const RasterVolume& pred, const RasterVolume& gt, const SsimParams& params) {
    require_same("ssim", pred, gt);
    if (gt.width < params.window || gt.height < params.window) {
        throw DimensionError("ssim: image " + std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                             " is smaller than the " + std::to_string(params.window) + "x" +
                             std::to_string(params.window) + " window");
    }
    const auto win = gaussian_window(params);
    std::vector<double> out;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        out.push_back(band_ssim(pred.band(l), gt.band(l), gt.width, gt.height, win, params));
    }
    return out;
}

double ssim(const RasterVolume& pred, const RasterVolume& gt, const SsimParams& params) {
    return mean(ssim_per_band(pred, gt, params));
}

std::vector<double> cc_per_band(const RasterVolume& pred, const RasterVolume& gt) {
    require_same("cc", pred, gt);
    std::vector<double> out;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        auto a = pred.band(l);
        auto b = gt.band(l);
        const double n = static_cast<double>(a.size());
        double ma = 0, mb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ma += a[i];
            mb += b[i];
        }
        ma /= n;
        mb /= n;
        double sab = 0, saa = 0, sbb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double da = a[i] - ma, db = b[i] - mb;
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        if (sbb == 0.0) {
            out.push_back(std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0);
        } else if (saa == 0.0) {
            out.push_back(0.0);
        } else {
            out.push_back(std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0));
        }
    }
    return out;
}

double cc(const RasterVolume& pred, const RasterVolume& gt) { return mean(cc_per_band(pred, gt)); }

double sam(const RasterVolume& pred, const RasterVolume& gt) {
    require_same("sam", pred, gt);
    if (gt.bands < 2) throw DimensionError("sam: needs at least 2 bands, got " + std::to_string(gt.bands));
    const std::size_t plane = gt.plane_size();
    double total = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        double na = 0, nb = 0;
        for (std::size_t l = 0; l < gt.bands; ++l) {
            const double a = pred.pixels[l * plane + i], b = gt.pixels[l * plane + i];
            na += a * a;
            nb += b * b;
        }
        na = std::sqrt(na);
        nb = std::sqrt(nb);
        if (na < 1e-12 || nb < 1e-12) continue;
        // Half-angle form 2*atan2(|u - v|, |u + v|) of the unit vectors: exact 0
        // for parallel inputs, where acos of a rounded cosine is not.
        double diff = 0, sum = 0;
        for (std::size_t l = 0; l < gt.bands; ++l) {
            const double u = pred.pixels[l * plane + i] / na, v = gt.pixels[l * plane + i] / nb;
            diff += (u - v) * (u - v);
            sum += (u + v) * (u + v);
        }
        total += 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
    }
    return total / static_cast<double>(plane);
}

double ergas(const RasterVolume& pred, const RasterVolume& gt, std::size_t scale) {
    require_same("ergas", pred, gt);
    if (scale == 0) throw ContractError("ergas: scale must be positive");
    double acc = 0.0;
    for (std::size_t l = 0; l < gt.bands; ++l) {
        auto b = gt.band(l);
        const double mu = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
        if (std::abs(mu) <= 1e-12) {
            throw DataError("ergas: ground-truth band " + std::to_string(l) +
                            " has a (near) zero mean; rescale the data so every band mean is positive");
        }
        const double rmse = std::sqrt(band_mse(pred.band(l), b));
        acc += (rmse / mu) * (rmse / mu);
    }
    return 100.0 / static_cast<double>(scale) * std::sqrt(acc / static_cast<double>(gt.bands));
}

MetricsReport evaluate(const RasterVolume& pred, const RasterVolume& gt, std::size_t scale, double time_s) {
    require_same("evaluate", pred, gt);
    MetricsReport r;
    r.psnr_db_bands = psnr_per_band(pred, gt);
    r.ssim_bands = ssim_per_band(pred, gt);
    r.cc_bands = cc_per_band(pred, gt);
    r.psnr_db = mean(r.psnr_db_bands);
    r.ssim = mean(r.ssim_bands);
    r.cc = mean(r.cc_bands);
    r.sam_rad = sam(pred, gt);
    r.ergas = ergas(pred, gt, scale);
    r.time_s = time_s;
    return r;
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out << "psnr_db=" << format_double(psnr_db) << '\n';
    out << "ssim=" << format_double(ssim) << '\n';
    out << "cc=" << format_double(cc) << '\n';
    out << "sam_rad=" << format_double(sam_rad) << '\n';
    out << "ergas=" << format_double(ergas) << '\n';
    out << "time_s=" << format_double(time_s) << '\n';
    for (std::size_t i = 0; i < psnr_db_bands.size(); ++i) out << "psnr_db_b" << i << '=' << format_double(psnr_db_bands[i]) << '\n';
    for (std::size_t i = 0; i < ssim_bands.size(); ++i) out << "ssim_b" << i << '=' << format_double(ssim_bands[i]) << '\n';
    for (std::size_t i = 0; i < cc_bands.size(); ++i) out << "cc_b" << i << '=' << format_double(cc_bands[i]) << '\n';
    return out.str();
}

MetricsReport MetricsReport::parse(const std::string& text) {
    MetricsReport r;
    std::map<std::string, double*> scalars{{"psnr_db", &r.psnr_db}, {"ssim", &r.ssim}, {"cc", &r.cc},
                                           {"sam_rad", &r.sam_rad}, {"ergas", &r.ergas}, {"time_s", &r.time_s}};
    std::map<std::string, std::vector<double>*> per_band{
        {"psnr_db_b", &r.psnr_db_bands}, {"ssim_b", &r.ssim_bands}, {"cc_b", &r.cc_bands}};
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("metrics report: expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const double value = parse_double(line.substr(eq + 1));
        if (auto it = scalars.find(key); it != scalars.end()) {
            *it->second = value;
            continue;
        }
        bool matched = false;
        for (auto& [prefix, vec] : per_band) {
            if (key.rfind(prefix, 0) == 0 && key.size() > prefix.size() &&
                std::all_of(key.begin() + static_cast<std::ptrdiff_t>(prefix.size()), key.end(), ::isdigit)) {
                const std::size_t idx = std::stoul(key.substr(prefix.size()));
                if (vec->size() <= idx) vec->resize(idx + 1, 0.0);
                (*vec)[idx] = value;
                matched = true;
                break;
            }
        }
        if (!matched) throw DataError("metrics report: unknown key '" + key + "'");
    }
    return r;
}

}  // namespace pansharp
