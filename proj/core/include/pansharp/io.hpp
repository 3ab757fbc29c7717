#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pansharp/raster.hpp"

namespace pansharp {

// MSRV raster container:
//   "MSRV" | u8 version=1 | u32le W | u32le H | u32le L | u8 dtype=1 (float32) |
//   W*H*L float32le, band-sequential.
inline constexpr std::array<char, 4> kRasterMagic{'M', 'S', 'R', 'V'};
inline constexpr std::uint8_t kRasterVersion = 0x01;
inline constexpr std::uint8_t kRasterFloat32 = 0x01;
inline constexpr std::size_t kRasterHeaderSize = 18;

std::vector<std::uint8_t> encode_raster(const RasterVolume& volume);
/// Values outside [0,1] are clamped; `clamped` (optional) receives the count.
RasterVolume decode_raster(const std::vector<std::uint8_t>& bytes, std::size_t* clamped = nullptr);

void write_raster(const RasterVolume& volume, const std::filesystem::path& path);
RasterVolume read_raster(const std::filesystem::path& path, std::size_t* clamped = nullptr);

// PSHW weights container:
//   "PSHW" | u8 version=1 | u32le block count |
//   per block: u16le name length | UTF-8 name | u8 rank | rank x u32le dims | float32le data.
// Block names carry the pipeline stage as a prefix: "<stage>/<name>".
inline constexpr std::array<char, 4> kWeightsMagic{'P', 'S', 'H', 'W'};
inline constexpr std::uint8_t kWeightsVersion = 0x01;

struct WeightBlock {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    friend bool operator==(const WeightBlock&, const WeightBlock&) = default;
};

struct WeightsFile {
    std::string stage;  // "fusion" | "texture"
    std::vector<WeightBlock> blocks;

    const WeightBlock& block(const std::string& name) const;
    bool has_block(const std::string& name) const;

    friend bool operator==(const WeightsFile&, const WeightsFile&) = default;
};

std::vector<std::uint8_t> encode_weights(const WeightsFile& weights);
WeightsFile decode_weights(const std::vector<std::uint8_t>& bytes);

void write_weights(const WeightsFile& weights, const std::filesystem::path& path);
WeightsFile read_weights(const std::filesystem::path& path);

/// 8-bit or 16-bit binary PGM (P5); v -> floor(v * (2^bits - 1) + 0.5).
void export_gray(const RasterVolume& volume, std::size_t band, int bitdepth, const std::filesystem::path& path);
/// 8-bit binary PPM (P6) from three bands.
void export_rgb(const RasterVolume& volume, const std::array<std::size_t, 3>& bands, const std::filesystem::path& path);

std::uint16_t quantize(float v, int bitdepth);

/// Reads binary PGM/PPM (8 or 16 bit) into a 1- or 3-band volume scaled to [0,1].
RasterVolume read_pnm(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path);

}  // namespace pansharp
