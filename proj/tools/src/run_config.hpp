#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pansharp/dataset.hpp"
#include "pansharp/fusion.hpp"
#include "pansharp/texture.hpp"

namespace pansharp::cli {

/// Malformed config text or an unknown key. Maps to the usage exit code.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Settings shared by the commands. File format: one `key = value` per line,
/// `#` starts a comment. `seed` seeds every stage unless a stage key
/// (`fusion.seed`, `texture.seed`, `patch.seed`) overrides it.
struct RunConfig {
    std::size_t scale = 4;
    PatchSampling patches;
    SplitCounts counts{640, 192, 192};
    FusionConfig fusion;
    TextureConfig texture;

    RunConfig();

    /// Applies one assignment; `where` prefixes error messages.
    void set(const std::string& key, const std::string& value, const std::string& where = "");

    /// Applies `key = value` lines; errors name the 1-based line.
    void apply_text(const std::string& text, const std::string& source = "config");
    void apply_file(const std::filesystem::path& path);

    /// `key=value` overrides from the command line, applied after the file.
    void apply_overrides(const std::vector<std::string>& assignments);

    static std::vector<std::string> keys();
};

SplitCounts parse_counts(const std::string& text);

}  // namespace pansharp::cli
