#pragma once

// Mixing instruction-tuning sources into one shuffled dataset with a manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace som {

struct MixSource {
    std::string label;
    std::filesystem::path path;
    std::optional<std::int64_t> take;  // whole source when unset
};

enum class OutputFormat { json_array, jsonl };

struct MixRecipe {
    std::vector<MixSource> sources;
    std::uint64_t shuffle_seed = 0;
    OutputFormat format = OutputFormat::jsonl;
};

/// {"seed": N, "format": "jsonl"|"json", "sources": [{"label", "path", "take"?}]}.
/// Relative source paths resolve against `base_dir`.
MixRecipe recipe_from_json(std::string_view json_text, const std::filesystem::path& base_dir);
MixRecipe load_recipe(const std::filesystem::path& path);

struct SourceCount {
    std::string label;
    std::int64_t available = 0;
    std::int64_t taken = 0;
};

struct MixManifest {
    std::vector<SourceCount> sources;
    std::int64_t total = 0;
    std::uint64_t seed = 0;
    OutputFormat format = OutputFormat::jsonl;
    std::string content_sha256;         // digest of the output file bytes
    std::string sorted_records_sha256;  // order-independent digest of the record multiset
};

struct MixResult {
    std::string output;  // serialized dataset
    MixManifest manifest;
};

/// Concatenates sources in recipe order (honouring take-counts), then applies
/// a seeded permutation.
MixResult mix(const MixRecipe& recipe);

std::string manifest_to_json(const MixManifest& manifest);

/// Runs `mix` and writes the dataset plus `<output>.manifest.json`.
MixManifest mix_to_file(const MixRecipe& recipe, const std::filesystem::path& output);

struct DatasetStats {
    std::int64_t records = 0;
    std::int64_t turns = 0;
    std::int64_t images = 0;         // distinct image paths
    std::int64_t listing_turns = 0;  // assistant turns containing a listing
    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const std::filesystem::path& path);

}  // namespace som
