#include "somlist/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "somlist/conversation.hpp"
#include "somlist/datamix.hpp"
#include "somlist/image.hpp"
#include "somlist/listparse.hpp"
#include "somlist/rng.hpp"
#include "somlist/sidecar.hpp"
#include "somlist/textgen.hpp"

namespace som {

using nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

Rgb rgb_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError("colour must be an [r, g, b] array");
    }
    return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

void require_exists(const fs::path& p, const std::string& what) {
    std::error_code ec;
    if (p.empty() || !fs::exists(p, ec)) {
        throw ConfigError(what + " does not exist: " + p.string());
    }
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + p.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs fn(i) for i in [0, n) on `jobs` threads. The exception from the lowest
// failing index is rethrown so the reported error does not depend on timing.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

int exit_code_for(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::config: return 2;
        case ErrorClass::data: return 3;
        case ErrorClass::io: return 4;
    }
    return 1;
}

PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base) {
    PipelineConfig c;
    try {
        if (j.contains("annotations")) c.annotations = resolve(base, j.at("annotations").get<std::string>());
        if (j.contains("images")) c.images = resolve(base, j.at("images").get<std::string>());
        if (j.contains("output_dir")) c.output_dir = resolve(base, j.at("output_dir").get<std::string>());
        c.level = j.value("level", c.level);
        if (j.contains("style")) {
            const json& s = j.at("style");
            c.style.glyph_scale = s.value("glyph_scale", c.style.glyph_scale);
            c.style.padding = s.value("padding", c.style.padding);
            if (s.contains("box_fill") && !s.at("box_fill").is_null()) c.style.box_fill = rgb_from_json(s.at("box_fill"));
            if (s.contains("text_color")) c.style.text_color = rgb_from_json(s.at("text_color"));
        }
        c.mode = j.value("mode", c.mode);
        if (j.contains("client")) c.client = client_config_from_json(j.at("client"));
        if (j.contains("match")) c.policy = match_policy_from_json(j.at("match").dump());
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
        if (j.contains("replay")) c.replay = resolve(base, j.at("replay").get<std::string>());
        c.strict = j.value("strict", c.strict);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid pipeline config: ") + e.what());
    }
    GranularityLevel::standard(c.level);
    c.style.validate();
    if (c.jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    require_exists(path, "config file");
    const std::string text = read_bytes(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
    }
    return pipeline_config_from_json(j, path.parent_path());
}

CommandResult cmd_tag(const PipelineConfig& config, std::ostream& log) {
    require_exists(config.annotations, "annotation file");
    require_exists(config.images, "image directory");
    if (config.output_dir.empty()) {
        throw ConfigError("no output directory given");
    }
    const GranularityLevel level = GranularityLevel::standard(config.level);
    config.style.validate();
    const AnnotationSet set = load_annotation_file(config.annotations);

    std::vector<const ImageRecord*> images;
    for (const auto& img : set.images()) {
        images.push_back(&img);
    }
    std::sort(images.begin(), images.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::set<std::string> stems;
    for (const auto* img : images) {
        if (!stems.insert(fs::path(img->file_name).stem().string()).second) {
            throw DataError("two images share the file stem of " + img->file_name);
        }
    }

    fs::create_directories(config.output_dir);
    std::vector<TagSidecar> sidecars(images.size());
    parallel_for(images.size(), config.jobs, [&](std::size_t i) {
        const ImageRecord& rec = *images[i];
        const RgbImage pixels = read_image(config.images / rec.file_name);
        const TaggedImage tagged = tag_image(set, rec.id, pixels, level, config.style);
        const std::string stem = fs::path(rec.file_name).stem().string();
        write_png(config.output_dir / (stem + ".png"), tagged.pixels);
        sidecars[i] = make_sidecar(set, tagged, stem + ".png", config.level);
        write_sidecar(config.output_dir / (stem + ".tags.json"), sidecars[i]);
    });

    std::int64_t tags = 0;
    std::int64_t collisions = 0;
    for (const auto& s : sidecars) {
        log << "tagged image " << s.image_id << ": " << s.placements.size() << " tags, " << s.collisions.size()
            << " collisions\n";
        tags += static_cast<std::int64_t>(s.placements.size());
        collisions += static_cast<std::int64_t>(s.collisions.size());
    }
    CommandResult r;
    r.summary["images"] = sidecars.size();
    r.summary["tags"] = tags;
    r.summary["collisions"] = collisions;
    r.summary["level"] = config.level;
    return r;
}

namespace {

struct GenItem {
    TagSidecar sidecar;
    std::string png;
};

std::unique_ptr<Generator> make_generator(const PipelineConfig& config) {
    if (config.replay) {
        return std::make_unique<ReplayGenerator>(*config.replay);
    }
    ClientConfig client = config.client;
    client.validate();
    load_api_key(client);
    return std::make_unique<VlmClient>(std::move(client), make_http_transport());
}

}  // namespace

CommandResult cmd_gen(const PipelineConfig& config, GenKind kind, const fs::path& tagged_dir, const fs::path& out,
                      std::ostream& log, Generator* generator) {
    require_exists(tagged_dir, "tagged directory");
    if (out.extension() != ".jsonl") {
        throw ConfigError("output file must end in .jsonl: " + out.string());
    }
    const bool rule = kind == GenKind::listing && config.mode == "rule";
    std::optional<PromptMode> mode;
    if (kind == GenKind::qa) {
        mode = PromptMode::improved_sysmsg;
    } else if (!rule) {
        mode = prompt_mode_from_string(config.mode);
    }

    std::vector<GenItem> items;
    for (const auto& path : list_sidecars(tagged_dir)) {
        TagSidecar s = read_sidecar(path);
        if (s.placements.empty()) {
            log << "skipping image " << s.image_id << ": no tags\n";
            continue;
        }
        std::string png = rule ? std::string() : read_bytes(tagged_dir / s.tagged_file);
        items.push_back({std::move(s), std::move(png)});
    }

    // Responses (or the per-item failure) in sidecar order.
    std::vector<std::string> responses(items.size());
    std::vector<std::string> errors(items.size());
    std::vector<ErrorClass> error_classes(items.size(), ErrorClass::data);
    if (rule) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            ListingRecord rec;
            rec.image_id = items[i].sidecar.image_id;
            auto placements = items[i].sidecar.placements;
            std::sort(placements.begin(), placements.end(),
                      [](const auto& a, const auto& b) { return a.placement.tag_id < b.placement.tag_id; });
            for (const auto& p : placements) {
                rec.items.push_back({p.placement.tag_id, p.category});
            }
            validate_listing(rec);
            responses[i] = format_listing(rec);
        }
    } else {
        std::vector<PromptBundle> bundles;
        for (const auto& it : items) {
            bundles.push_back(kind == GenKind::qa
                                  ? build_qa_prompt(it.png, it.sidecar.placements.size())
                                  : build_listing_prompt(it.png, it.sidecar.placements.size(), *mode));
        }
        std::unique_ptr<Generator> owned;
        if (generator == nullptr) {
            owned = make_generator(config);
            generator = owned.get();
        }
        auto outcomes = submit_batch(*generator, bundles, config.jobs);
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].result) {
                responses[i] = outcomes[i].result->text;
            } else {
                errors[i] = outcomes[i].error;
                error_classes[i] = ErrorClass::io;
            }
        }
    }

    std::vector<ConversationRecord> records;
    ojson failures = ojson::array();
    std::optional<ErrorClass> first_failure;
    const std::string prefix = kind == GenKind::qa ? "som-qa-" : "som-listing-";
    for (std::size_t i = 0; i < items.size(); ++i) {
        const TagSidecar& s = items[i].sidecar;
        const ImageRef ref{s.image_id, s.tagged_file};
        const std::string id = prefix + std::to_string(s.image_id);
        if (errors[i].empty()) {
            try {
                if (kind == GenKind::qa) {
                    records.push_back(to_qa_conversation_record(id, ref, responses[i]));
                } else {
                    const auto& tmpl = sample_template(listing_templates(), derive_seed(config.seed, s.image_id));
                    records.push_back(to_conversation_record(id, ref, tmpl.text, responses[i]));
                }
                log << "image " << s.image_id << ": ok\n";
                continue;
            } catch (const Error& e) {
                errors[i] = e.what();
                error_classes[i] = e.error_class();
            }
        }
        log << "image " << s.image_id << ": failed: " << errors[i] << "\n";
        failures.push_back({{"image_id", s.image_id}, {"error", errors[i]}});
        if (!first_failure) {
            first_failure = error_classes[i];
        }
    }

    fs::path json_out = out;
    json_out.replace_extension(".json");
    fs::path failures_out = out;
    failures_out.replace_extension(".failures.jsonl");
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    write_jsonl(out, records);
    write_json_array(json_out, records);
    std::string failure_lines;
    for (const auto& f : failures) {
        failure_lines += f.dump() + "\n";
    }
    write_bytes(failures_out, failure_lines);

    CommandResult r;
    r.summary["kind"] = kind == GenKind::qa ? "qa" : "listing";
    r.summary["mode"] = kind == GenKind::qa ? std::string(to_string(*mode)) : config.mode;
    r.summary["records"] = records.size();
    r.summary["failures"] = failures.size();
    r.summary["output"] = out.filename().string();
    if (first_failure && (config.strict || records.empty())) {
        r.exit_code = exit_code_for(*first_failure);
    }
    return r;
}

CommandResult cmd_probe(const std::vector<fs::path>& files, std::ostream& log) {
    if (files.empty()) {
        throw ConfigError("probe needs at least one input file");
    }
    for (const auto& f : files) {
        require_exists(f, "input file");
    }
    std::vector<ProbeStats> stats(files.size());
    parallel_for(files.size(), static_cast<int>(files.size()), [&](std::size_t i) { stats[i] = probe_file(files[i]); });

    CommandResult r;
    r.summary["files"] = ojson::array();
    ProbeStats total;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (stats[i].total == 0) {
            log << "warning: " << files[i].string() << " has no assistant texts; percentage reported as 0.00\n";
        }
        log << probe_tsv_line(files[i].string(), stats[i]) << "\n";
        r.summary["files"].push_back({{"file", files[i].string()},
                                      {"texts", stats[i].total},
                                      {"listing", stats[i].listing},
                                      {"percentage", stats[i].percentage_text()}});
        total += stats[i];
    }
    r.summary["total"] = {{"texts", total.total}, {"listing", total.listing}, {"percentage", total.percentage_text()}};
    return r;
}

CommandResult cmd_score(const PipelineConfig& config, const fs::path& pred, const fs::path& gold,
                        const std::optional<fs::path>& out, std::ostream& log) {
    require_exists(pred, "prediction file");
    require_exists(gold, "gold path");
    const ScoreReport report = score_file(pred, gold, config.policy);
    const std::string text = report_to_json(report);
    for (const auto& img : report.images) {
        log << "image " << img.image_id << ": " << img.score.n_correct << "/" << img.score.n_total
            << (img.missing_prediction ? " (no prediction)" : "") << "\n";
    }
    if (out) {
        write_bytes(*out, text);
    }
    CommandResult r;
    r.summary = ojson::parse(text);
    return r;
}

CommandResult cmd_mix(const fs::path& recipe_path, const fs::path& out, const std::optional<std::string>& format,
                      const std::optional<std::uint64_t>& seed, std::ostream& log) {
    require_exists(recipe_path, "recipe file");
    MixRecipe recipe = load_recipe(recipe_path);
    if (format) {
        if (*format == "jsonl") {
            recipe.format = OutputFormat::jsonl;
        } else if (*format == "json") {
            recipe.format = OutputFormat::json_array;
        } else {
            throw ConfigError("unknown output format '" + *format + "'");
        }
    }
    if (seed) {
        recipe.shuffle_seed = *seed;
    }
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    const MixManifest manifest = mix_to_file(recipe, out);
    for (const auto& s : manifest.sources) {
        log << s.label << ": " << s.taken << " of " << s.available << " records\n";
    }
    CommandResult r;
    r.summary = ojson::parse(manifest_to_json(manifest));
    r.summary["output"] = out.filename().string();
    return r;
}

}  // namespace som
