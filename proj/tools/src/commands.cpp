#include "commands.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "pansharp/checks.hpp"
#include "pansharp/errors.hpp"
#include "pansharp/fusion.hpp"
#include "pansharp/io.hpp"
#include "pansharp/metrics.hpp"
#include "pansharp/resample.hpp"
#include "pansharp/synthetic.hpp"
#include "pansharp/texture.hpp"
#include "run_config.hpp"

namespace pansharp::cli {

namespace {

RunConfig load_config(const ConfigOptions& o) {
    RunConfig cfg;
    if (o.config) cfg.apply_file(*o.config);
    cfg.apply_overrides(o.overrides);
    return cfg;
}

std::string size_text(const RasterVolume& v) {
    return std::to_string(v.width) + "x" + std::to_string(v.height) + "x" + std::to_string(v.bands);
}

std::vector<std::size_t> parse_indices(const std::string& text) {
    std::vector<std::size_t> out;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        try {
            out.push_back(std::stoul(part));
        } catch (const std::exception&) {
            throw ConfigError("expected a comma-separated list of band indices, got '" + text + "'");
        }
    }
    return out;
}

void write_text(const std::string& text, const fs::path& path) {
    write_file_bytes(std::vector<std::uint8_t>(text.begin(), text.end()), path);
}

fs::path manifest_relative(const fs::path& file, const fs::path& manifest) {
    return fs::relative(fs::absolute(file), fs::absolute(manifest).parent_path());
}

std::vector<PatchPair> load_pairs(const fs::path& manifest) {
    return PatchManifest::load(manifest).materialize(fs::absolute(manifest).parent_path());
}

std::function<void(const EpochRecord&)> progress(std::ostream& out, bool quiet) {
    if (quiet) return {};
    return [&out](const EpochRecord& r) {
        char line[96];
        std::snprintf(line, sizeof line, "epoch %zu  train %.6f  val %.6f", r.epoch, r.train_l1, r.val_l1);
        out << line << '\n' << std::flush;
    };
}

void finish_training(const TrainingLog& log, const WeightsFile& weights, const TrainOptions& o, std::ostream& out) {
    write_weights(weights, o.out_weights);
    if (o.log) write_text(log.to_text(), *o.log);
    out << "best epoch " << log.best_epoch << " of " << log.epochs.size() << ", val L1 " << log.best_val_l1
        << "\nweights: " << o.out_weights.string() << '\n';
}

}  // namespace

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
    const auto scene = synthetic_scene(o.width, o.height, o.bands, o.seed);
    fs::create_directories(o.out_dir);
    write_raster(scene.ms, o.out_dir / "ms.msrv");
    write_raster(scene.pan, o.out_dir / "pan.msrv");
    out << "ms " << size_text(scene.ms) << ", pan " << size_text(scene.pan) << " -> " << o.out_dir.string() << '\n';
    return kOk;
}

int cmd_degrade(const DegradeOptions& o, std::ostream& out) {
    const RunConfig cfg = load_config(o.config);
    const std::size_t scale = o.scale.value_or(cfg.scale);
    const auto ms = read_raster(o.ms);
    const auto pan = read_raster(o.pan);
    const auto triple = wald_degrade(ms, pan, scale);
    fs::create_directories(o.out_dir);
    write_raster(triple.ms_lr, o.out_dir / "ms_lr.msrv");
    write_raster(triple.pan, o.out_dir / "pan.msrv");
    write_raster(triple.ms_hr, o.out_dir / "gt.msrv");
    out << "ms_lr " << size_text(triple.ms_lr) << ", pan " << size_text(triple.pan) << ", gt "
        << size_text(triple.ms_hr) << " (scale " << scale << ")\n";
    return kOk;
}

int cmd_patch(const PatchOptions& o, std::ostream& out) {
    RunConfig cfg = load_config(o.config);
    if (o.size) cfg.patches.size = *o.size;
    if (o.stride) cfg.patches.stride = *o.stride;
    if (o.random) cfg.patches.random_count = *o.random;
    if (o.seed) cfg.patches.seed = *o.seed;
    if (o.counts) cfg.counts = parse_counts(*o.counts);

    const auto ms = read_raster(o.ms_lr);
    const auto pan = read_raster(o.pan);
    const auto gt = read_raster(o.gt);
    PatchManifest m;
    m.scale = infer_scale(ms, pan, gt);
    m.patch = cfg.patches.size;
    m.offsets = patch_offsets(ms.width, ms.height, cfg.patches);
    m.splits = assign_splits(m.offsets.size(), cfg.counts, cfg.patches.seed);
    m.ms_lr = manifest_relative(o.ms_lr, o.out);
    m.pan = manifest_relative(o.pan, o.out);
    m.gt = manifest_relative(o.gt, o.out);
    m.save(o.out);
    out << m.offsets.size() << " patches of " << m.patch << "x" << m.patch << " (scale " << m.scale << "): train "
        << cfg.counts.train << ", val " << cfg.counts.val << ", test " << cfg.counts.test << ", unused "
        << m.offsets.size() - cfg.counts.total() << '\n';
    return kOk;
}

int cmd_split(const SplitOptions& o, std::ostream& out) {
    auto m = PatchManifest::load(o.manifest);
    const auto counts = parse_counts(o.counts);
    m.splits = assign_splits(m.offsets.size(), counts, o.seed);
    const fs::path dest = o.out.value_or(o.manifest);
    if (dest != o.manifest) {
        const auto base = fs::absolute(o.manifest).parent_path();
        for (auto* p : {&m.ms_lr, &m.pan, &m.gt}) {
            if (p->is_relative()) *p = manifest_relative(base / *p, dest);
        }
    }
    m.save(dest);
    out << "retagged " << m.offsets.size() << " patches: train " << counts.train << ", val " << counts.val
        << ", test " << counts.test << '\n';
    return kOk;
}

int cmd_train_fusion(const TrainOptions& o, std::ostream& out) {
    const RunConfig cfg = load_config(o.config);
    const auto pairs = load_pairs(o.manifest);
    const auto result = train_fusion(pairs, cfg.fusion, progress(out, o.quiet));
    finish_training(result.log, result.weights, o, out);
    return kOk;
}

int cmd_train_texture(const TrainOptions& o, std::ostream& out) {
    if (!o.fusion_weights) {
        throw ConfigError(
            "train-texture needs trained Step-1 weights: run `pansharp train-fusion` first and pass "
            "--fusion-weights");
    }
    if (!fs::exists(*o.fusion_weights)) {
        throw DataError("fusion weights not found: " + o.fusion_weights->string() +
                        " (train-fusion must run before train-texture)");
    }
    const RunConfig cfg = load_config(o.config);
    const auto fusion = FusionNet<float>::from_weights(read_weights(*o.fusion_weights));
    if (fusion.channels() != cfg.fusion.channels || fusion.blocks() != cfg.fusion.blocks ||
        fusion.kernel() != cfg.fusion.kernel) {
        throw DataError("fusion weights (" + std::to_string(fusion.channels()) + " channels, " +
                        std::to_string(fusion.blocks()) + " blocks, kernel " + std::to_string(fusion.kernel()) +
                        ") do not match the fusion.* settings of the config");
    }
    const auto pairs = load_pairs(o.manifest);
    const auto result = train_texture(pairs, fusion, cfg.texture, progress(out, o.quiet));
    finish_training(result.log, result.weights, o, out);
    return kOk;
}

int cmd_run(const RunOptions& o, std::ostream& out) {
    const auto ms = read_raster(o.ms_lr);
    const auto pan = read_raster(o.pan);
    const auto fusion = FusionNet<float>::from_weights(read_weights(o.fusion_weights));
    if (fusion.bands() != ms.bands) {
        throw DataError("fusion weights expect " + std::to_string(fusion.bands()) + " bands, input has " +
                        std::to_string(ms.bands));
    }
    std::optional<TextureTransformer<float>> texture;
    if (o.texture_weights) texture = TextureTransformer<float>::from_weights(read_weights(*o.texture_weights));

    const auto start = std::chrono::steady_clock::now();
    const auto result = pansharpen(fusion, texture ? &*texture : nullptr, ms, pan);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_raster(result, o.out);
    if (o.preview) {
        const auto b = parse_indices(o.preview_bands);
        if (b.size() == 1) {
            export_gray(result, b[0], 8, *o.preview);
        } else if (b.size() == 3) {
            export_rgb(result, {b[0], b[1], b[2]}, *o.preview);
        } else {
            throw ConfigError("--preview-bands takes one or three band indices");
        }
    }
    out << (texture ? "fusion + texture" : "fusion only") << ": " << size_text(result) << " -> " << o.out.string()
        << " (" << seconds << " s)\n";
    return kOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
    const auto pred = read_raster(o.pred);
    const auto gt = read_raster(o.gt);
    const auto report = evaluate(pred, gt, o.scale, o.time_s);
    const auto text = report.to_text();
    if (o.out) write_text(text, *o.out);
    out << text;
    return kOk;
}

int cmd_selfcheck(const SelfcheckOptions& o, std::ostream& out) {
    GradientFaultGuard fault(o.inject_gradient_fault);
    std::size_t failed = 0;
    for (const auto& c : run_selfcheck(o.seeds)) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        if (!c.passed) ++failed;
    }
    out << (failed ? std::to_string(failed) + " check(s) failed" : std::string("all checks passed")) << '\n';
    return failed ? kCheckFailed : kOk;
}

int cmd_export(const ExportOptions& o, std::ostream& out) {
    const auto v = read_raster(o.in);
    if (o.rgb) {
        const auto b = parse_indices(*o.rgb);
        if (b.size() != 3) throw ConfigError("--rgb takes three band indices");
        export_rgb(v, {b[0], b[1], b[2]}, o.out);
    } else {
        if (o.bits != 8 && o.bits != 16) throw ConfigError("--bits must be 8 or 16");
        export_gray(v, o.band, o.bits, o.out);
    }
    out << "wrote " << o.out.string() << '\n';
    return kOk;
}

}  // namespace pansharp::cli
