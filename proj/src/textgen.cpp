#include "somlist/textgen.hpp"

#include <algorithm>

#include <json.hpp>

#include "somlist/digest.hpp"
#include "somlist/errors.hpp"
#include "somlist/resources.hpp"
#include "somlist/rng.hpp"

namespace som {

using nlohmann::json;

ListingRecord rule_based_listing(const AnnotationSet& set, std::int64_t image_id,
                                 std::span<const TagPlacement> placements) {
    std::vector<TagPlacement> ordered(placements.begin(), placements.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const TagPlacement& a, const TagPlacement& b) { return a.tag_id < b.tag_id; });
    ListingRecord rec;
    rec.image_id = image_id;
    for (const auto& p : ordered) {
        const SegmentationAnnotation* ann = set.find_annotation(p.annotation_id);
        if (ann == nullptr) {
            throw ReferentialError("tag " + std::to_string(p.tag_id) + ": annotation " +
                                       std::to_string(p.annotation_id) + " does not resolve",
                                   p.annotation_id);
        }
        const CategoryRecord* cat = set.find_category(ann->category_id);
        if (cat == nullptr) {
            throw ReferentialError("annotation " + std::to_string(ann->id) + ": category " +
                                       std::to_string(ann->category_id) + " does not resolve",
                                   ann->id);
        }
        rec.items.push_back({p.tag_id, cat->name});
    }
    validate_listing(rec);
    return rec;
}

std::vector<InstructionTemplate> templates_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed template file: ") + e.what(), e.byte);
    }
    if (!j.is_array() || j.empty()) {
        throw DataError("template file must be a non-empty JSON array");
    }
    std::vector<InstructionTemplate> out;
    try {
        for (const auto& t : j) {
            out.push_back({t.at("id").get<int>(), t.at("text").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid template file: ") + e.what());
    }
    return out;
}

const std::vector<InstructionTemplate>& listing_templates() {
    static const std::vector<InstructionTemplate> templates =
        templates_from_json(resources::get("listing_templates.json"));
    return templates;
}

const InstructionTemplate& sample_template(std::span<const InstructionTemplate> templates, std::uint64_t seed) {
    if (templates.empty()) {
        throw ConfigError("cannot sample from an empty template set");
    }
    Rng rng(seed);
    return templates[uniform_index(rng, templates.size())];
}

std::string_view to_string(PromptMode mode) {
    switch (mode) {
        case PromptMode::zero_shot: return "zero_shot";
        case PromptMode::improved_sysmsg: return "improved_sysmsg";
        case PromptMode::two_shot_icl: return "two_shot_icl";
    }
    return "zero_shot";
}

PromptMode prompt_mode_from_string(std::string_view name) {
    if (name == "zero_shot") return PromptMode::zero_shot;
    if (name == "improved_sysmsg") return PromptMode::improved_sysmsg;
    if (name == "two_shot_icl") return PromptMode::two_shot_icl;
    throw ConfigError("unknown prompt mode '" + std::string(name) + "'");
}

const PromptTexts& prompt_texts() {
    static const PromptTexts texts = [] {
        const std::string_view raw = resources::get("prompts.json");
        const json j = json::parse(raw.begin(), raw.end());
        PromptTexts t;
        t.listing_user_text = j.at("listing_user_text").get<std::string>();
        t.distant_object_rule = j.at("distant_object_rule").get<std::string>();
        t.improved_system_message = j.at("improved_system_message").get<std::string>() + " " + t.distant_object_rule;
        t.qa_system_message = j.at("qa_system_message").get<std::string>() + " " + t.distant_object_rule;
        t.qa_user_text = j.at("qa_user_text").get<std::string>();
        return t;
    }();
    return texts;
}

const std::vector<Exemplar>& icl_exemplars() {
    static const std::vector<Exemplar> exemplars = [] {
        const std::string_view raw = resources::get("icl/exemplars.json");
        const json j = json::parse(raw.begin(), raw.end());
        std::vector<Exemplar> out;
        for (const auto& e : j) {
            std::string listing(resources::get(e.at("listing").get<std::string>()));
            while (!listing.empty() && (listing.back() == '\n' || listing.back() == '\r')) {
                listing.pop_back();
            }
            out.push_back({std::string(resources::get(e.at("image").get<std::string>())), std::move(listing)});
        }
        return out;
    }();
    return exemplars;
}

void validate_bundle(const PromptBundle& b) {
    const bool two_shot = b.mode == PromptMode::two_shot_icl;
    if (two_shot ? b.exemplars.size() != 2 : !b.exemplars.empty()) {
        throw DataError("prompt bundle: exemplars must be empty unless mode is two_shot_icl (then exactly 2)");
    }
    if ((b.mode == PromptMode::zero_shot) != b.system_message.empty()) {
        throw DataError("prompt bundle: system message must be customised exactly when mode is not zero_shot");
    }
    if (b.image_png.empty()) {
        throw DataError("prompt bundle: missing image payload");
    }
}

PromptBundle build_listing_prompt(std::string tagged_png, std::size_t tag_count, PromptMode mode) {
    if (tag_count == 0) {
        throw DataError("cannot build a listing prompt for an image without tags");
    }
    PromptBundle b;
    b.mode = mode;
    b.user_text = prompt_texts().listing_user_text;
    b.image_png = std::move(tagged_png);
    if (mode != PromptMode::zero_shot) {
        b.system_message = prompt_texts().improved_system_message;
    }
    if (mode == PromptMode::two_shot_icl) {
        b.exemplars = icl_exemplars();
    }
    validate_bundle(b);
    return b;
}

PromptBundle build_listing_prompt(const TaggedImage& tagged, PromptMode mode) {
    return build_listing_prompt(encode_png(tagged.pixels), tagged.placements.size(), mode);
}

PromptBundle build_qa_prompt(std::string tagged_png, std::size_t tag_count) {
    if (tag_count == 0) {
        throw DataError("cannot build a QA prompt for an image without tags");
    }
    PromptBundle b;
    b.mode = PromptMode::improved_sysmsg;
    b.system_message = prompt_texts().qa_system_message;
    b.user_text = prompt_texts().qa_user_text;
    b.image_png = std::move(tagged_png);
    validate_bundle(b);
    return b;
}

PromptBundle build_qa_prompt(const TaggedImage& tagged) {
    return build_qa_prompt(encode_png(tagged.pixels), tagged.placements.size());
}

std::string bundle_hash(const PromptBundle& b) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(b.mode);
    j["system"] = b.system_message;
    j["exemplars"] = nlohmann::ordered_json::array();
    for (const auto& e : b.exemplars) {
        j["exemplars"].push_back({{"image_sha256", sha256_hex(e.image_png)}, {"listing", e.listing_text}});
    }
    j["user"] = b.user_text;
    j["image_sha256"] = sha256_hex(b.image_png);
    return sha256_hex(j.dump());
}

}  // namespace som
