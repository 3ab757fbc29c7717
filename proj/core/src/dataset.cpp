#include "pansharp/dataset.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "pansharp/errors.hpp"
#include "pansharp/io.hpp"
#include "pansharp/rng.hpp"

namespace pansharp {

const char* split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::unused: break;
    }
    return "unused";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    if (name == "unused") return Split::unused;
    throw DataError("unknown split tag '" + name + "'");
}

std::size_t infer_scale(const RasterVolume& ms_lr, const RasterVolume& pan, const RasterVolume& gt) {
    if (pan.bands != 1) throw DataError("PAN must have 1 band, got " + std::to_string(pan.bands));
    if (gt.bands != ms_lr.bands) {
        throw DataError("GT has " + std::to_string(gt.bands) + " bands but LR MS has " + std::to_string(ms_lr.bands));
    }
    if (gt.width != pan.width || gt.height != pan.height) throw DataError("GT and PAN sizes differ");
    if (pan.width % ms_lr.width != 0 || pan.height % ms_lr.height != 0 ||
        pan.width / ms_lr.width != pan.height / ms_lr.height) {
        throw DataError("PAN " + std::to_string(pan.width) + "x" + std::to_string(pan.height) +
                        " is not an integer multiple of LR MS " + std::to_string(ms_lr.width) + "x" +
                        std::to_string(ms_lr.height));
    }
    return pan.width / ms_lr.width;
}

std::vector<PatchOffset> patch_offsets(std::size_t lr_width, std::size_t lr_height, const PatchSampling& sampling) {
    if (sampling.size == 0 || sampling.size > lr_width || sampling.size > lr_height) {
        throw ContractError("patch size " + std::to_string(sampling.size) + " does not fit a " +
                            std::to_string(lr_width) + "x" + std::to_string(lr_height) + " image");
    }
    std::vector<PatchOffset> out;
    if (sampling.random_count > 0) {
        Rng rng(sampling.seed);
        for (std::size_t k = 0; k < sampling.random_count; ++k) {
            const auto x = rng.below(lr_width - sampling.size + 1);
            const auto y = rng.below(lr_height - sampling.size + 1);
            out.push_back({static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
        }
        return out;
    }
    if (sampling.stride == 0) throw ContractError("patch stride must be positive");
    for (std::size_t y = 0; y + sampling.size <= lr_height; y += sampling.stride) {
        for (std::size_t x = 0; x + sampling.size <= lr_width; x += sampling.stride) out.push_back({x, y});
    }
    return out;
}

PatchPair slice_patch(const RasterVolume& ms_lr, const RasterVolume& pan, const RasterVolume& gt, PatchOffset offset,
                      std::size_t size, std::size_t scale) {
    PatchPair p;
    p.ms = ms_lr.crop(offset.x, offset.y, size, size);
    p.pan = pan.crop(offset.x * scale, offset.y * scale, size * scale, size * scale);
    p.gt = gt.crop(offset.x * scale, offset.y * scale, size * scale, size * scale);
    p.offset = offset;
    return p;
}

std::vector<PatchPair> extract_patches(const RasterVolume& ms_lr, const RasterVolume& pan, const RasterVolume& gt,
                                       const PatchSampling& sampling) {
    const std::size_t scale = infer_scale(ms_lr, pan, gt);
    std::vector<PatchPair> out;
    for (const auto& o : patch_offsets(ms_lr.width, ms_lr.height, sampling)) {
        out.push_back(slice_patch(ms_lr, pan, gt, o, sampling.size, scale));
    }
    return out;
}

std::vector<Split> assign_splits(std::size_t total, SplitCounts counts, std::uint64_t seed) {
    if (counts.total() > total) {
        throw ContractError("split counts " + std::to_string(counts.train) + "+" + std::to_string(counts.val) + "+" +
                            std::to_string(counts.test) + " exceed the " + std::to_string(total) + " available pairs");
    }
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<Split> tags(total, Split::unused);
    std::size_t k = 0;
    for (std::size_t i = 0; i < counts.train; ++i) tags[order[k++]] = Split::train;
    for (std::size_t i = 0; i < counts.val; ++i) tags[order[k++]] = Split::val;
    for (std::size_t i = 0; i < counts.test; ++i) tags[order[k++]] = Split::test;
    return tags;
}

void split_dataset(std::vector<PatchPair>& pairs, SplitCounts counts, std::uint64_t seed) {
    const auto tags = assign_splits(pairs.size(), counts, seed);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].split = tags[i];
}

std::vector<PatchPair> select_split(const std::vector<PatchPair>& pairs, Split split) {
    std::vector<PatchPair> out;
    for (const auto& p : pairs) {
        if (p.split == split) out.push_back(p);
    }
    return out;
}

std::string PatchManifest::to_text() const {
    std::ostringstream out;
    out << "# patch manifest\n";
    out << "ms_lr=" << ms_lr.string() << '\n';
    out << "pan=" << pan.string() << '\n';
    out << "gt=" << gt.string() << '\n';
    out << "scale=" << scale << '\n';
    out << "patch=" << patch << '\n';
    out << "offset_x,offset_y,split\n";
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        out << offsets[i].x << ',' << offsets[i].y << ',' << split_name(splits[i]) << '\n';
    }
    return out.str();
}

PatchManifest PatchManifest::parse(const std::string& text) {
    PatchManifest m;
    std::istringstream in(text);
    std::string line;
    bool in_table = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line == "offset_x,offset_y,split") {
            in_table = true;
            continue;
        }
        auto fail = [&](const std::string& why) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + why);
        };
        if (!in_table) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail("expected key=value");
            const std::string key = line.substr(0, eq);
            const std::string value = line.substr(eq + 1);
            try {
                if (key == "ms_lr") m.ms_lr = value;
                else if (key == "pan") m.pan = value;
                else if (key == "gt") m.gt = value;
                else if (key == "scale") m.scale = std::stoul(value);
                else if (key == "patch") m.patch = std::stoul(value);
                else fail("unknown key '" + key + "'");
            } catch (const std::invalid_argument&) {
                fail("bad number '" + value + "'");
            }
            continue;
        }
        std::istringstream row(line);
        std::string xs, ys, tag;
        if (!std::getline(row, xs, ',') || !std::getline(row, ys, ',') || !std::getline(row, tag)) {
            fail("expected offset_x,offset_y,split");
        }
        try {
            m.offsets.push_back({std::stoul(xs), std::stoul(ys)});
        } catch (const std::exception&) {
            fail("bad offset");
        }
        m.splits.push_back(parse_split(tag));
    }
    return m;
}

void PatchManifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << to_text();
}

PatchManifest PatchManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read manifest " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

std::vector<PatchPair> PatchManifest::materialize(const std::filesystem::path& base) const {
    auto resolve = [&](const std::filesystem::path& p) { return p.is_relative() ? base / p : p; };
    const RasterVolume ms = read_raster(resolve(ms_lr));
    const RasterVolume pn = read_raster(resolve(pan));
    const RasterVolume g = read_raster(resolve(gt));
    if (infer_scale(ms, pn, g) != scale) {
        throw DataError("manifest scale " + std::to_string(scale) + " disagrees with the raster sizes");
    }
    std::vector<PatchPair> out;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (splits[i] == Split::unused) continue;
        auto p = slice_patch(ms, pn, g, offsets[i], patch, scale);
        p.split = splits[i];
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace pansharp
