#include "kinverify/cli/config.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "kinverify/error.hpp"
#include "kinverify/io.hpp"

namespace kinverify::cli {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T number(std::string_view key, std::string_view text) {
    const std::string s = trim(text);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size() && !s.empty(),
            ErrorCode::invalid_argument,
            "config key '" + std::string(key) + "': '" + std::string(text) + "' is not a number");
    return v;
}

int positive(std::string_view key, std::string_view text) {
    const int v = number<int>(key, text);
    require(v >= 1, ErrorCode::invalid_argument,
            "config key '" + std::string(key) + "' must be >= 1");
    return v;
}

std::vector<int> int_list(std::string_view key, std::string_view text) {
    std::vector<int> out;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ','))
        if (!trim(item).empty()) out.push_back(positive(key, item));
    return out;
}

bool boolean(std::string_view key, std::string_view text) {
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    fail(ErrorCode::invalid_argument,
         "config key '" + std::string(key) + "': '" + s + "' is not a boolean");
}

std::string json_scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + json_scalar_text(v[i]);
        return out;
    }
    return v.dump();
}

}  // namespace

std::filesystem::path RunConfig::resolved_banks_dir() const {
    return banks_dir.empty() ? out_dir / "banks" : banks_dir;
}

std::filesystem::path RunConfig::resolved_cache_dir() const {
    if (const char* env = std::getenv("KINVERIFY_CACHE_DIR"); env && *env) return env;
    return cache_dir.empty() ? out_dir / "cache" : cache_dir;
}

void apply(RunConfig& c, std::string_view key, std::string_view value) {
    PipelineConfig& p = c.pipeline;
    const std::string v = trim(value);
    if (key == "manifest") c.manifest = v;
    else if (key == "out") c.out_dir = v;
    else if (key == "banks") c.banks_dir = v;
    else if (key == "cache") c.cache_dir = v;
    else if (key == "lbp_radii") p.lbp_radii = int_list(key, v);
    else if (key == "lbp_neighbors") p.lbp_neighbors = positive(key, v);
    else if (key == "bsif_sizes") p.bsif_sizes = int_list(key, v);
    else if (key == "bits") p.bits = positive(key, v);
    else if (key == "patches") p.patches = number<std::size_t>(key, v);
    else if (key == "grid_rows") p.grid.rows = positive(key, v);
    else if (key == "grid_cols") p.grid.cols = positive(key, v);
    else if (key == "pca_cap") p.pca_cap = positive(key, v);
    else if (key == "m1") p.m1 = positive(key, v);
    else if (key == "m2") p.m2 = positive(key, v);
    else if (key == "sweeps") p.sweeps = number<int>(key, v);
    else if (key == "fusion") p.fusion = parse_fusion(v);
    else if (key == "filter_learning") p.filter_learning = parse_filter_learning(v);
    else if (key == "seed_patch") p.seeds.patch = number<std::uint64_t>(key, v);
    else if (key == "seed_ica") p.seeds.ica = number<std::uint64_t>(key, v);
    else if (key == "seed_negatives") p.seeds.negatives = number<std::uint64_t>(key, v);
    else if (key == "seed_folds") p.seeds.folds = number<std::uint64_t>(key, v);
    else if (key == "seed_fit") p.seeds.fit = number<std::uint64_t>(key, v);
    else if (key == "seed_shuffle") p.seeds.shuffle = number<std::uint64_t>(key, v);
    else if (key == "shuffle_labels") p.shuffle_labels = boolean(key, v);
    else if (key == "ica_tolerance") p.ica.tolerance = number<double>(key, v);
    else if (key == "ica_max_iterations") p.ica.max_iterations = positive(key, v);
    else if (key == "jobs") p.jobs = positive(key, v);
    else if (key == "families") c.families = number<int>(key, v);
    else if (key == "difficulty") c.difficulty = number<double>(key, v);
    else if (key == "synth_seed") c.synth_seed = number<std::uint64_t>(key, v);
    else fail(ErrorCode::invalid_argument, "unknown config key '" + std::string(key) + "'");
}

std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    const std::string& name) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCode::invalid_argument,
                name + ":" + std::to_string(line_no) + ": expected key = value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_file(RunConfig& config, const std::filesystem::path& path) {
    const std::string text = read_file(path);
    if (trim(text).starts_with("{")) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::invalid_argument, path.string() + ": " + e.what());
        }
        const auto& body = j.contains("config") ? j["config"] : j;
        require(body.is_object(), ErrorCode::invalid_argument,
                path.string() + ": expected a JSON object");
        for (const auto& [key, value] : body.items()) apply(config, key, json_scalar_text(value));
        return;
    }
    for (const auto& [key, value] : parse_key_values(text, path.string()))
        apply(config, key, value);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
    const PipelineConfig& p = c.pipeline;
    nlohmann::ordered_json j;
    j["manifest"] = c.manifest.generic_string();
    j["banks"] = c.banks_dir.generic_string();
    j["lbp_radii"] = p.lbp_radii;
    j["lbp_neighbors"] = p.lbp_neighbors;
    j["bsif_sizes"] = p.bsif_sizes;
    j["bits"] = p.bits;
    j["patches"] = p.patches;
    j["grid_rows"] = p.grid.rows;
    j["grid_cols"] = p.grid.cols;
    j["pca_cap"] = p.pca_cap;
    j["m1"] = p.m1;
    j["m2"] = p.m2;
    j["sweeps"] = p.sweeps;
    j["fusion"] = std::string(to_string(p.fusion));
    j["filter_learning"] = std::string(to_string(p.filter_learning));
    j["seed_patch"] = p.seeds.patch;
    j["seed_ica"] = p.seeds.ica;
    j["seed_negatives"] = p.seeds.negatives;
    j["seed_folds"] = p.seeds.folds;
    j["seed_fit"] = p.seeds.fit;
    j["seed_shuffle"] = p.seeds.shuffle;
    j["shuffle_labels"] = p.shuffle_labels;
    j["ica_tolerance"] = p.ica.tolerance;
    j["ica_max_iterations"] = p.ica.max_iterations;
    return j;
}

std::string to_key_values(const RunConfig& c) {
    std::string out;
    const auto j = to_json(c);
    for (const auto& [key, value] : j.items())
        out += key + " = " + json_scalar_text(nlohmann::json(value)) + "\n";
    return out;
}

}  // namespace kinverify::cli
