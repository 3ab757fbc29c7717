#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "pansharp/autodiff.hpp"
#include "pansharp/raster.hpp"
#include "pansharp/rng.hpp"

namespace testing {

template <class T = double>
pansharp::BasicTensor<T> random_tensor(pansharp::Shape shape, pansharp::Rng& rng, double lo = -1.0, double hi = 1.0) {
    pansharp::BasicTensor<T> t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

inline pansharp::RasterVolume random_volume(std::size_t w, std::size_t h, std::size_t l, pansharp::Rng& rng,
                                            double lo = 0.0, double hi = 1.0) {
    pansharp::RasterVolume v(w, h, l);
    for (auto& p : v.pixels) p = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

template <class T>
double max_abs_diff(const pansharp::BasicTensor<T>& a, const pansharp::BasicTensor<T>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

inline double max_abs_diff(const pansharp::RasterVolume& a, const pansharp::RasterVolume& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) m = std::max(m, std::abs(double(a.pixels[i]) - b.pixels[i]));
    return m;
}

inline double sum_of(const pansharp::RasterVolume& v) {
    double s = 0.0;
    for (float p : v.pixels) s += p;
    return s;
}

template <class T>
double sum_of(const pansharp::BasicTensor<T>& t) {
    double s = 0.0;
    for (auto v : t.data()) s += double(v);
    return s;
}

/// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pansharp_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
