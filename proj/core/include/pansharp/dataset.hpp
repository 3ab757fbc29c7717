#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pansharp/raster.hpp"

namespace pansharp {

enum class Split { unused, train, val, test };

const char* split_name(Split split);
Split parse_split(const std::string& name);

struct PatchOffset {
    std::size_t x = 0;  // in LR MS pixels
    std::size_t y = 0;

    friend bool operator==(const PatchOffset&, const PatchOffset&) = default;
};

/// One training sample: LR MS patch, PAN and GT patches at `scale` times its size.
struct PatchPair {
    RasterVolume ms;
    RasterVolume pan;
    RasterVolume gt;
    PatchOffset offset;
    Split split = Split::unused;
};

struct PatchSampling {
    std::size_t size = 16;          // LR MS patch edge
    std::size_t stride = 16;        // grid mode step
    std::size_t random_count = 0;   // > 0 switches to seeded random offsets
    std::uint64_t seed = 0;
};

/// Scale factor implied by a (LR MS, PAN, GT) triple; throws on inconsistent sizes.
std::size_t infer_scale(const RasterVolume& ms_lr, const RasterVolume& pan, const RasterVolume& gt);

/// Grid offsets (row-major) or `random_count` seeded uniform offsets.
std::vector<PatchOffset> patch_offsets(std::size_t lr_width, std::size_t lr_height, const PatchSampling& sampling);

PatchPair slice_patch(const RasterVolume& ms_lr, const RasterVolume& pan, const RasterVolume& gt,
                      PatchOffset offset, std::size_t size, std::size_t scale);

std::vector<PatchPair> extract_patches(const RasterVolume& ms_lr, const RasterVolume& pan, const RasterVolume& gt,
                                       const PatchSampling& sampling);

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;

    std::size_t total() const { return train + val + test; }
};

/// Seeded shuffle of [0, total), then the first `train` indices are tagged
/// train, the next `val` val, the next `test` test; the rest stay unused.
std::vector<Split> assign_splits(std::size_t total, SplitCounts counts, std::uint64_t seed);

void split_dataset(std::vector<PatchPair>& pairs, SplitCounts counts, std::uint64_t seed);

std::vector<PatchPair> select_split(const std::vector<PatchPair>& pairs, Split split);

/// Text manifest listing source rasters, geometry and tagged patch offsets.
struct PatchManifest {
    std::filesystem::path ms_lr;
    std::filesystem::path pan;
    std::filesystem::path gt;
    std::size_t scale = 4;
    std::size_t patch = 16;
    std::vector<PatchOffset> offsets;
    std::vector<Split> splits;

    std::string to_text() const;
    static PatchManifest parse(const std::string& text);

    void save(const std::filesystem::path& path) const;
    static PatchManifest load(const std::filesystem::path& path);

    /// Reads the referenced rasters (relative paths resolve against `base`) and slices every tagged pair.
    std::vector<PatchPair> materialize(const std::filesystem::path& base = {}) const;
};

}  // namespace pansharp
