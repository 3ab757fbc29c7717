#include "run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "pansharp/io.hpp"

namespace pansharp::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw ConfigError(key + ": expected a number, got '" + value + "'");
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class Field>
Setter size_field(Field field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
        field(c) = static_cast<std::size_t>(parse_unsigned(k, v));
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"scale", size_field([](RunConfig& c) -> std::size_t& { return c.scale; })},
        {"seed",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const auto seed = parse_unsigned(k, v);
             c.fusion.seed = c.texture.seed = c.patches.seed = seed;
         }},
        {"patch.size", size_field([](RunConfig& c) -> std::size_t& { return c.patches.size; })},
        {"patch.stride", size_field([](RunConfig& c) -> std::size_t& { return c.patches.stride; })},
        {"patch.random", size_field([](RunConfig& c) -> std::size_t& { return c.patches.random_count; })},
        {"patch.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.patches.seed = parse_unsigned(k, v); }},
        {"split.train", size_field([](RunConfig& c) -> std::size_t& { return c.counts.train; })},
        {"split.val", size_field([](RunConfig& c) -> std::size_t& { return c.counts.val; })},
        {"split.test", size_field([](RunConfig& c) -> std::size_t& { return c.counts.test; })},
        {"fusion.channels", size_field([](RunConfig& c) -> std::size_t& { return c.fusion.channels; })},
        {"fusion.blocks", size_field([](RunConfig& c) -> std::size_t& { return c.fusion.blocks; })},
        {"fusion.kernel", size_field([](RunConfig& c) -> std::size_t& { return c.fusion.kernel; })},
        {"fusion.lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.fusion.learning_rate = parse_real(k, v); }},
        {"fusion.batch", size_field([](RunConfig& c) -> std::size_t& { return c.fusion.batch_size; })},
        {"fusion.patience", size_field([](RunConfig& c) -> std::size_t& { return c.fusion.patience; })},
        {"fusion.max_epochs", size_field([](RunConfig& c) -> std::size_t& { return c.fusion.max_epochs; })},
        {"fusion.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.fusion.seed = parse_unsigned(k, v); }},
        {"texture.channels", size_field([](RunConfig& c) -> std::size_t& { return c.texture.channels; })},
        {"texture.patch", size_field([](RunConfig& c) -> std::size_t& { return c.texture.patch; })},
        {"texture.lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.texture.learning_rate = parse_real(k, v); }},
        {"texture.batch", size_field([](RunConfig& c) -> std::size_t& { return c.texture.batch_size; })},
        {"texture.patience", size_field([](RunConfig& c) -> std::size_t& { return c.texture.patience; })},
        {"texture.max_epochs", size_field([](RunConfig& c) -> std::size_t& { return c.texture.max_epochs; })},
        {"texture.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.texture.seed = parse_unsigned(k, v); }},
    };
    return table;
}

}  // namespace

RunConfig::RunConfig() {
    fusion.seed = texture.seed = patches.seed = 1;
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& where) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
    try {
        it->second(*this, key, value);
    } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
    }
}

void RunConfig::apply_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + " line " + std::to_string(number) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(where + "empty key or value");
        set(key, value, where);
    }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    apply_text(std::string(bytes.begin(), bytes.end()), path.string());
}

void RunConfig::apply_overrides(const std::vector<std::string>& assignments) {
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + a + "'");
        set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)), "--set " + a + ": ");
    }
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, v] : setters()) out.push_back(k);
    return out;
}

SplitCounts parse_counts(const std::string& text) {
    SplitCounts c;
    std::size_t* fields[3] = {&c.train, &c.val, &c.test};
    std::istringstream in(text);
    std::string part;
    int i = 0;
    while (std::getline(in, part, ',')) {
        if (i == 3) throw ConfigError("counts: expected train,val,test, got '" + text + "'");
        *fields[i++] = static_cast<std::size_t>(parse_unsigned("counts", trim(part)));
    }
    if (i != 3) throw ConfigError("counts: expected train,val,test, got '" + text + "'");
    return c;
}

}  // namespace pansharp::cli
