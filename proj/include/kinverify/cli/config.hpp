#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "kinverify/pipeline.hpp"

namespace kinverify::cli {

inline constexpr double kModerateDifficulty = 0.35;

/// Everything a subcommand needs. Result-affecting fields are echoed into
/// reports; `jobs` is not, since it never changes the numbers.
struct RunConfig {
    PipelineConfig pipeline;
    std::filesystem::path manifest;
    std::filesystem::path out_dir = "kinverify-out";
    std::filesystem::path banks_dir;  // empty: <out_dir>/banks
    std::filesystem::path cache_dir;  // empty: $KINVERIFY_CACHE_DIR or <out_dir>/cache
    int families = 50;
    double difficulty = kModerateDifficulty;
    std::uint64_t synth_seed = 7;

    std::filesystem::path resolved_banks_dir() const;
    std::filesystem::path resolved_cache_dir() const;
};

/// Sets one key (e.g. "bsif_sizes", "seed_ica", "fusion") from its text form.
void apply(RunConfig& config, std::string_view key, std::string_view value);

/// `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    const std::string& name = "config");

/// Reads a key-value config file, or the "config" object of a JSON report.
void apply_file(RunConfig& config, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& config);

/// Key-value text that reproduces `config` when applied to the defaults.
std::string to_key_values(const RunConfig& config);

}  // namespace kinverify::cli
