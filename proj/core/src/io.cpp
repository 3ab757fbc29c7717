#include "pansharp/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "pansharp/errors.hpp"

namespace pansharp {

namespace {

class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& in, const char* what) : in_(in), what_(what) {}

    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) {
            throw TruncatedError(std::string(what_) + ": truncated, needed " + std::to_string(n) + " bytes at offset " +
                                 std::to_string(pos_) + " but only " + std::to_string(in_.size() - pos_) + " remain");
        }
    }
    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& in_;
    const char* what_;
    std::size_t pos_ = 0;
};

void check_magic(ByteReader& r, const std::array<char, 4>& magic, const char* what) {
    if (r.remaining() < magic.size()) {
        throw TruncatedError(std::string(what) + ": file shorter than its magic number");
    }
    const std::string got = r.str(magic.size());
    if (std::memcmp(got.data(), magic.data(), magic.size()) != 0) {
        throw BadMagicError(std::string(what) + ": bad magic, expected \"" + std::string(magic.begin(), magic.end()) +
                            "\"");
    }
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string() + " for reading");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::uint8_t> encode_raster(const RasterVolume& volume) {
    ByteWriter w;
    w.bytes(kRasterMagic.data(), kRasterMagic.size());
    w.u8(kRasterVersion);
    w.u32(static_cast<std::uint32_t>(volume.width));
    w.u32(static_cast<std::uint32_t>(volume.height));
    w.u32(static_cast<std::uint32_t>(volume.bands));
    w.u8(kRasterFloat32);
    for (float v : volume.pixels) w.f32(v);
    return w.take();
}

RasterVolume decode_raster(const std::vector<std::uint8_t>& bytes, std::size_t* clamped) {
    ByteReader r(bytes, "MSRV raster");
    check_magic(r, kRasterMagic, "MSRV raster");
    const std::uint8_t version = r.u8();
    if (version != kRasterVersion) {
        throw UnknownVersionError("MSRV raster: unknown version " + std::to_string(version));
    }
    const std::uint32_t w = r.u32();
    const std::uint32_t h = r.u32();
    const std::uint32_t l = r.u32();
    const std::uint8_t dtype = r.u8();
    if (dtype != kRasterFloat32) {
        throw FormatError("MSRV raster: unsupported dtype " + std::to_string(dtype));
    }
    if (w == 0 || h == 0 || l == 0) {
        throw FormatError("MSRV raster: zero extent in header");
    }
    const std::size_t count = static_cast<std::size_t>(w) * h * l;
    r.need(count * 4);
    if (r.remaining() != count * 4) {
        throw FormatError("MSRV raster: " + std::to_string(r.remaining() - count * 4) + " trailing bytes after payload");
    }
    std::vector<float> data(count);
    for (auto& v : data) {
        v = r.f32();
        if (!std::isfinite(v)) throw DataError("MSRV raster: non-finite pixel value");
    }
    RasterVolume volume(w, h, l, std::move(data));
    const std::size_t moved = volume.clamp_unit();
    if (clamped) *clamped = moved;
    return volume;
}

void write_raster(const RasterVolume& volume, const std::filesystem::path& path) {
    write_file_bytes(encode_raster(volume), path);
}

RasterVolume read_raster(const std::filesystem::path& path, std::size_t* clamped) {
    return decode_raster(read_file_bytes(path), clamped);
}

const WeightBlock& WeightsFile::block(const std::string& name) const {
    for (const auto& b : blocks) {
        if (b.name == name) return b;
    }
    throw DataError("weights (" + stage + "): missing block '" + name + "'");
}

bool WeightsFile::has_block(const std::string& name) const {
    return std::any_of(blocks.begin(), blocks.end(), [&](const WeightBlock& b) { return b.name == name; });
}

namespace {

void validate_weights(const WeightsFile& weights) {
    if (weights.stage != "fusion" && weights.stage != "texture") {
        throw FormatError("PSHW weights: unknown stage tag '" + weights.stage + "'");
    }
    std::unordered_set<std::string> names;
    for (const auto& b : weights.blocks) {
        if (!names.insert(b.name).second) throw FormatError("PSHW weights: duplicate block '" + b.name + "'");
        std::size_t n = 1;
        for (auto d : b.dims) n *= d;
        if (b.dims.empty() || n != b.data.size()) {
            throw FormatError("PSHW weights: block '" + b.name + "' dims do not match its data length");
        }
    }
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const WeightsFile& weights) {
    validate_weights(weights);
    ByteWriter w;
    w.bytes(kWeightsMagic.data(), kWeightsMagic.size());
    w.u8(kWeightsVersion);
    w.u32(static_cast<std::uint32_t>(weights.blocks.size()));
    for (const auto& b : weights.blocks) {
        const std::string full = weights.stage + "/" + b.name;
        if (full.size() > 0xFFFF) throw FormatError("PSHW weights: block name too long");
        w.u16(static_cast<std::uint16_t>(full.size()));
        w.bytes(full.data(), full.size());
        w.u8(static_cast<std::uint8_t>(b.dims.size()));
        for (auto d : b.dims) w.u32(d);
        for (float v : b.data) w.f32(v);
    }
    return w.take();
}

WeightsFile decode_weights(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes, "PSHW weights");
    check_magic(r, kWeightsMagic, "PSHW weights");
    const std::uint8_t version = r.u8();
    if (version != kWeightsVersion) {
        throw UnknownVersionError("PSHW weights: unknown version " + std::to_string(version));
    }
    const std::uint32_t count = r.u32();
    WeightsFile weights;
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint16_t len = r.u16();
        const std::string full = r.str(len);
        const auto slash = full.find('/');
        if (slash == std::string::npos) {
            throw FormatError("PSHW weights: block name '" + full + "' lacks a stage prefix");
        }
        const std::string stage = full.substr(0, slash);
        if (k == 0) {
            weights.stage = stage;
        } else if (stage != weights.stage) {
            throw FormatError("PSHW weights: mixed stage tags '" + weights.stage + "' and '" + stage + "'");
        }
        WeightBlock b;
        b.name = full.substr(slash + 1);
        const std::uint8_t rank = r.u8();
        std::size_t n = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            b.dims.push_back(r.u32());
            n *= b.dims.back();
        }
        r.need(n * 4);
        b.data.resize(n);
        for (auto& v : b.data) v = r.f32();
        weights.blocks.push_back(std::move(b));
    }
    if (r.remaining() != 0) {
        throw FormatError("PSHW weights: " + std::to_string(r.remaining()) + " trailing bytes");
    }
    if (count == 0) throw FormatError("PSHW weights: no blocks");
    validate_weights(weights);
    return weights;
}

void write_weights(const WeightsFile& weights, const std::filesystem::path& path) {
    write_file_bytes(encode_weights(weights), path);
}

WeightsFile read_weights(const std::filesystem::path& path) { return decode_weights(read_file_bytes(path)); }

std::uint16_t quantize(float v, int bitdepth) {
    const double maxv = bitdepth == 16 ? 65535.0 : 255.0;
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<std::uint16_t>(std::floor(c * maxv + 0.5));
}

void export_gray(const RasterVolume& volume, std::size_t band, int bitdepth, const std::filesystem::path& path) {
    if (band >= volume.bands) {
        throw DataError("export_gray: band " + std::to_string(band) + " out of range (bands=" +
                        std::to_string(volume.bands) + ")");
    }
    if (bitdepth != 8 && bitdepth != 16) throw ContractError("export_gray: bit depth must be 8 or 16");
    std::ostringstream header;
    header << "P5\n" << volume.width << ' ' << volume.height << '\n' << (bitdepth == 16 ? 65535 : 255) << '\n';
    ByteWriter w;
    const std::string h = header.str();
    w.bytes(h.data(), h.size());
    for (float v : volume.band(band)) {
        const std::uint16_t q = quantize(v, bitdepth);
        if (bitdepth == 16) {
            w.u8(static_cast<std::uint8_t>(q >> 8));  // PNM samples are big-endian
            w.u8(static_cast<std::uint8_t>(q & 0xFF));
        } else {
            w.u8(static_cast<std::uint8_t>(q));
        }
    }
    write_file_bytes(w.take(), path);
}

void export_rgb(const RasterVolume& volume, const std::array<std::size_t, 3>& bands, const std::filesystem::path& path) {
    for (auto b : bands) {
        if (b >= volume.bands) {
            throw DataError("export_rgb: band " + std::to_string(b) + " out of range (bands=" +
                            std::to_string(volume.bands) + ")");
        }
    }
    std::ostringstream header;
    header << "P6\n" << volume.width << ' ' << volume.height << "\n255\n";
    ByteWriter w;
    const std::string h = header.str();
    w.bytes(h.data(), h.size());
    for (std::size_t i = 0; i < volume.plane_size(); ++i) {
        for (auto b : bands) w.u8(static_cast<std::uint8_t>(quantize(volume.band(b)[i], 8)));
    }
    write_file_bytes(w.take(), path);
}

RasterVolume read_pnm(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    auto token = [&]() {
        std::string t;
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
                if (!t.empty()) return t;
            } else {
                t.push_back(c);
                ++pos;
            }
        }
        return t;
    };
    const std::string kind = token();
    if (kind != "P5" && kind != "P6") throw BadMagicError("PNM: " + path.string() + " is not binary PGM/PPM");
    std::size_t w = 0, h = 0;
    unsigned long maxval = 0;
    try {
        w = std::stoul(token());
        h = std::stoul(token());
        maxval = std::stoul(token());
    } catch (const std::exception&) {
        throw FormatError("PNM: malformed header in " + path.string());
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw FormatError("PNM: bad header values in " + path.string());
    const std::size_t channels = kind == "P6" ? 3 : 1;
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    if (bytes.size() - pos < w * h * channels * sample_bytes) throw TruncatedError("PNM: truncated payload in " + path.string());
    RasterVolume out(w, h, channels);
    for (std::size_t i = 0; i < w * h; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            unsigned v = bytes[pos++];
            if (sample_bytes == 2) v = (v << 8) | bytes[pos++];
            out.band(c)[i] = static_cast<float>(static_cast<double>(v) / static_cast<double>(maxval));
        }
    }
    return out;
}

}  // namespace pansharp
