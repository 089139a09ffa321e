#include "somlist/datamix.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <json.hpp>

#include "somlist/conversation.hpp"
#include "somlist/digest.hpp"
#include "somlist/errors.hpp"
#include "somlist/listparse.hpp"
#include "somlist/rng.hpp"

namespace som {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string format_name(OutputFormat f) { return f == OutputFormat::jsonl ? "jsonl" : "json"; }

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Source records in canonical compact form, checked to be conversation records.
std::vector<std::string> load_source(const MixSource& src) {
    std::vector<ojson> raw = read_record_file(src.path);
    std::vector<std::string> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        try {
            const ConversationRecord rec = record_from_json(raw[i]);
            // Text-only records are allowed, so no image-token check here.
            if (rec.conversations.size() < 2) {
                throw DataError("needs at least two turns");
            }
            for (std::size_t t = 0; t < rec.conversations.size(); ++t) {
                if (rec.conversations[t].speaker != (t % 2 == 0 ? Speaker::human : Speaker::assistant)) {
                    throw DataError("turns must alternate starting with human");
                }
            }
        } catch (const DataError& e) {
            throw DataError(src.path.string() + ": record " + std::to_string(i) + ": " + e.what());
        }
        out.push_back(raw[i].dump());
    }
    return out;
}

}  // namespace

MixRecipe recipe_from_json(std::string_view text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed recipe: ") + e.what(), e.byte);
    }
    MixRecipe recipe;
    try {
        recipe.shuffle_seed = j.at("seed").get<std::uint64_t>();
        const std::string fmt = j.value("format", "jsonl");
        if (fmt == "jsonl") {
            recipe.format = OutputFormat::jsonl;
        } else if (fmt == "json") {
            recipe.format = OutputFormat::json_array;
        } else {
            throw RecipeError("unknown output format '" + fmt + "'");
        }
        std::set<std::string> labels;
        for (const auto& s : j.at("sources")) {
            MixSource src;
            src.label = s.at("label").get<std::string>();
            if (src.label.empty() || !labels.insert(src.label).second) {
                throw RecipeError("source labels must be non-empty and unique: '" + src.label + "'");
            }
            std::filesystem::path p = s.at("path").get<std::string>();
            src.path = p.is_absolute() ? p : base_dir / p;
            if (s.contains("take") && !s.at("take").is_null()) {
                const auto take = s.at("take").get<std::int64_t>();
                if (take < 0) {
                    throw RecipeError("take-count for '" + src.label + "' is negative");
                }
                src.take = take;
            }
            recipe.sources.push_back(std::move(src));
        }
    } catch (const json::exception& e) {
        throw RecipeError(std::string("invalid recipe: ") + e.what());
    }
    return recipe;
}

MixRecipe load_recipe(const std::filesystem::path& path) {
    return recipe_from_json(read_text(path), path.parent_path());
}

MixResult mix(const MixRecipe& recipe) {
    std::vector<std::future<std::vector<std::string>>> loads;
    for (const auto& src : recipe.sources) {
        loads.push_back(std::async(std::launch::async, [&src] { return load_source(src); }));
    }

    MixResult result;
    result.manifest.seed = recipe.shuffle_seed;
    result.manifest.format = recipe.format;
    std::vector<std::string> records;
    for (std::size_t i = 0; i < recipe.sources.size(); ++i) {
        std::vector<std::string> rows = loads[i].get();
        const auto& src = recipe.sources[i];
        const auto available = static_cast<std::int64_t>(rows.size());
        const std::int64_t take = src.take.value_or(available);
        if (take > available) {
            throw RecipeError("source '" + src.label + "' has " + std::to_string(available) +
                              " records but the recipe takes " + std::to_string(take));
        }
        result.manifest.sources.push_back({src.label, available, take});
        std::move(rows.begin(), rows.begin() + take, std::back_inserter(records));
    }
    result.manifest.total = static_cast<std::int64_t>(records.size());

    seeded_shuffle(std::span<std::string>(records), recipe.shuffle_seed);

    std::string out;
    if (recipe.format == OutputFormat::jsonl) {
        for (const auto& r : records) {
            out += r;
            out += '\n';
        }
    } else {
        out += "[\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            out += records[i];
            out += i + 1 < records.size() ? ",\n" : "\n";
        }
        out += "]\n";
    }
    result.manifest.content_sha256 = sha256_hex(out);

    std::vector<std::string> digests;
    digests.reserve(records.size());
    for (const auto& r : records) {
        digests.push_back(sha256_hex(r));
    }
    std::sort(digests.begin(), digests.end());
    Sha256 multiset;
    for (const auto& d : digests) {
        multiset.update(d);
        multiset.update("\n");
    }
    result.manifest.sorted_records_sha256 = multiset.hex_digest();
    result.output = std::move(out);
    return result;
}

std::string manifest_to_json(const MixManifest& m) {
    ojson j;
    j["seed"] = m.seed;
    j["format"] = format_name(m.format);
    j["sources"] = ojson::array();
    for (const auto& s : m.sources) {
        j["sources"].push_back({{"label", s.label}, {"available", s.available}, {"taken", s.taken}});
    }
    j["total"] = m.total;
    j["content_sha256"] = m.content_sha256;
    j["sorted_records_sha256"] = m.sorted_records_sha256;
    return j.dump(2) + "\n";
}

MixManifest mix_to_file(const MixRecipe& recipe, const std::filesystem::path& output) {
    MixResult result = mix(recipe);
    auto write = [](const std::filesystem::path& p, const std::string& bytes) {
        std::ofstream out(p, std::ios::binary);
        if (!out) {
            throw IoError("cannot write " + p.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    };
    write(output, result.output);
    write(std::filesystem::path(output.string() + ".manifest.json"), manifest_to_json(result.manifest));
    return result.manifest;
}

DatasetStats dataset_stats(const std::filesystem::path& path) {
    DatasetStats stats;
    std::set<std::string> images;
    const auto raw = read_record_file(path);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        ConversationRecord rec;
        try {
            rec = record_from_json(raw[i]);
        } catch (const DataError& e) {
            throw DataError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
        }
        ++stats.records;
        stats.turns += static_cast<std::int64_t>(rec.conversations.size());
        if (!rec.image.empty()) {
            images.insert(rec.image);
        }
        for (const auto& turn : rec.conversations) {
            if (turn.speaker == Speaker::assistant && detect_listing(turn.value).has_listing) {
                ++stats.listing_turns;
            }
        }
    }
    stats.images = static_cast<std::int64_t>(images.size());
    return stats;
}

}  // namespace som
