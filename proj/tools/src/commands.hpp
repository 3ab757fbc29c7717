#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pansharp::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kCheckFailed = 3 };

/// Runs a command body and maps exceptions onto exit codes, printing the
/// message to `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

/// Options shared by the commands that read a RunConfig.
struct ConfigOptions {
    std::optional<fs::path> config;
    std::vector<std::string> overrides;  // key=value
};

struct SynthOptions {
    std::size_t width = 256, height = 256, bands = 4;
    std::uint64_t seed = 1;
    fs::path out_dir;
};
int cmd_synth(const SynthOptions& o, std::ostream& out);

struct DegradeOptions {
    fs::path ms, pan, out_dir;
    ConfigOptions config;
    std::optional<std::size_t> scale;
};
int cmd_degrade(const DegradeOptions& o, std::ostream& out);

struct PatchOptions {
    fs::path ms_lr, pan, gt, out;
    ConfigOptions config;
    std::optional<std::string> counts;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> size, stride, random;
};
int cmd_patch(const PatchOptions& o, std::ostream& out);

struct SplitOptions {
    fs::path manifest;
    std::optional<fs::path> out;
    std::string counts;
    std::uint64_t seed = 1;
};
int cmd_split(const SplitOptions& o, std::ostream& out);

struct TrainOptions {
    fs::path manifest, out_weights;
    std::optional<fs::path> fusion_weights, log;
    ConfigOptions config;
    bool quiet = false;
};
int cmd_train_fusion(const TrainOptions& o, std::ostream& out);
int cmd_train_texture(const TrainOptions& o, std::ostream& out);

struct RunOptions {
    fs::path ms_lr, pan, fusion_weights, out;
    std::optional<fs::path> texture_weights, preview;
    std::string preview_bands = "0,1,2";
};
int cmd_run(const RunOptions& o, std::ostream& out);

struct EvalOptions {
    fs::path pred, gt;
    std::size_t scale = 4;
    double time_s = 0.0;
    std::optional<fs::path> out;
};
int cmd_eval(const EvalOptions& o, std::ostream& out);

struct SelfcheckOptions {
    std::size_t seeds = 5;
    bool inject_gradient_fault = false;
};
int cmd_selfcheck(const SelfcheckOptions& o, std::ostream& out);

struct ExportOptions {
    fs::path in, out;
    std::size_t band = 0;
    int bits = 8;
    std::optional<std::string> rgb;
};
int cmd_export(const ExportOptions& o, std::ostream& out);

}  // namespace pansharp::cli
