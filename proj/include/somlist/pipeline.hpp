#pragma once

// Subcommand implementations behind the `somtool` CLI. Each returns the JSON
// summary the CLI prints on stdout; progress goes to `log`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "somlist/errors.hpp"
#include "somlist/eval.hpp"
#include "somlist/markalloc.hpp"
#include "somlist/vlm_client.hpp"

namespace som {

inline constexpr std::uint64_t kDefaultSeed = 20231019;

struct PipelineConfig {
    std::filesystem::path annotations;
    std::filesystem::path images;      // directory holding the source images
    std::filesystem::path output_dir;  // tagged images + sidecars
    int level = 2;
    TagStyle style;
    std::string mode = "rule";  // rule | zero_shot | improved_sysmsg | two_shot_icl
    ClientConfig client;
    MatchPolicy policy;
    std::uint64_t seed = kDefaultSeed;
    int jobs = 1;
    std::optional<std::filesystem::path> replay;
    bool strict = false;
};

/// Reads a JSON config; relative paths resolve against the config's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Exit code for an error class: 2 config, 3 data, 4 I/O.
int exit_code_for(ErrorClass cls);

struct CommandResult {
    nlohmann::ordered_json summary;
    int exit_code = 0;
};

/// Tags every image (ascending image_id) into `output_dir` as `<stem>.png`
/// plus `<stem>.tags.json`.
CommandResult cmd_tag(const PipelineConfig& config, std::ostream& log);

enum class GenKind { listing, qa };

/// Reads sidecars from `tagged_dir` and writes `out` (JSON Lines), the array
/// export next to it (`.json`), and `<out stem>.failures.jsonl`.
/// `generator` overrides the replay/network choice when non-null.
CommandResult cmd_gen(const PipelineConfig& config, GenKind kind, const std::filesystem::path& tagged_dir,
                      const std::filesystem::path& out, std::ostream& log, Generator* generator = nullptr);

CommandResult cmd_probe(const std::vector<std::filesystem::path>& files, std::ostream& log);

CommandResult cmd_score(const PipelineConfig& config, const std::filesystem::path& pred,
                        const std::filesystem::path& gold, const std::optional<std::filesystem::path>& out,
                        std::ostream& log);

CommandResult cmd_mix(const std::filesystem::path& recipe, const std::filesystem::path& out,
                      const std::optional<std::string>& format, const std::optional<std::uint64_t>& seed,
                      std::ostream& log);

}  // namespace som
