// somtool: tag images, generate listing/QA records, probe corpora, score
// predictions and mix datasets.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "somlist/errors.hpp"
#include "somlist/pipeline.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"Set-of-Mark dataset toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
    std::string replay;
    bool strict = false;
    app.add_option("--config", config_path, "pipeline config (JSON)");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "seed for template sampling and shuffling");
    app.add_option("--replay", replay, "directory of canned model responses");
    app.add_flag("--strict", strict, "fail if any record fails");

    auto* tag = app.add_subcommand("tag", "draw numbered tags and write sidecars");
    std::string tag_ann, tag_images, tag_out;
    std::optional<int> tag_level;
    tag->add_option("--annotations", tag_ann, "COCO-style annotation file");
    tag->add_option("--images", tag_images, "directory with the source images");
    tag->add_option("--out", tag_out, "output directory");
    tag->add_option("--level", tag_level, "granularity level 1-3");

    auto* gen_listing = app.add_subcommand("gen-listing", "generate listing records");
    auto* gen_qa = app.add_subcommand("gen-qa", "generate QA conversation records");
    std::string gen_tagged, gen_out, gen_mode;
    for (auto* sub : {gen_listing, gen_qa}) {
        sub->add_option("--tagged", gen_tagged, "directory of tagged images and sidecars");
        sub->add_option("--out", gen_out, "output .jsonl")->required();
    }
    gen_listing->add_option("--mode", gen_mode, "rule | zero_shot | improved_sysmsg | two_shot_icl");

    auto* probe = app.add_subcommand("probe", "count texts containing a listing");
    std::vector<std::string> probe_files;
    probe->add_option("files", probe_files, "JSON / JSONL files")->required();

    auto* score = app.add_subcommand("score", "list-wise accuracy of predictions");
    std::string score_pred, score_gold, score_out;
    bool exact_only = false;
    score->add_option("--pred", score_pred, "predictions (.jsonl)")->required();
    score->add_option("--gold", score_gold, "sidecar dir, sidecar, or gold .jsonl")->required();
    score->add_option("--out", score_out, "also write the report here");
    score->add_flag("--exact", exact_only, "disable whole-word containment matching");

    auto* mix = app.add_subcommand("mix", "mix conversation datasets");
    std::string mix_recipe, mix_out, mix_format;
    mix->add_option("--recipe", mix_recipe, "recipe JSON")->required();
    mix->add_option("--out", mix_out, "output dataset")->required();
    mix->add_option("--format", mix_format, "json | jsonl (overrides the recipe)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        som::PipelineConfig config =
            config_path.empty() ? som::PipelineConfig{} : som::load_pipeline_config(config_path);
        if (jobs) config.jobs = *jobs;
        if (seed) config.seed = *seed;
        if (!replay.empty()) config.replay = fs::path(replay);
        if (strict) config.strict = true;

        som::CommandResult result;
        if (*tag) {
            if (!tag_ann.empty()) config.annotations = tag_ann;
            if (!tag_images.empty()) config.images = tag_images;
            if (!tag_out.empty()) config.output_dir = tag_out;
            if (tag_level) config.level = *tag_level;
            result = som::cmd_tag(config, std::cerr);
        } else if (*gen_listing || *gen_qa) {
            if (!gen_mode.empty()) config.mode = gen_mode;
            const fs::path tagged = gen_tagged.empty() ? config.output_dir : fs::path(gen_tagged);
            result = som::cmd_gen(config, *gen_qa ? som::GenKind::qa : som::GenKind::listing, tagged, gen_out,
                                  std::cerr);
        } else if (*probe) {
            result = som::cmd_probe({probe_files.begin(), probe_files.end()}, std::cerr);
        } else if (*score) {
            if (exact_only) config.policy.substring_match = false;
            result = som::cmd_score(config, score_pred, score_gold,
                                    score_out.empty() ? std::nullopt : std::optional<fs::path>(score_out), std::cerr);
        } else if (*mix) {
            result = som::cmd_mix(mix_recipe, mix_out, mix_format.empty() ? std::nullopt : std::optional(mix_format),
                                  seed, std::cerr);
        }
        std::cout << result.summary.dump(2) << "\n";
        return result.exit_code;
    } catch (const som::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return som::exit_code_for(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
