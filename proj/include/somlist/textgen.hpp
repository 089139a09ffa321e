#pragma once

// Listing and QA text for tagged images: rule-based listings from ground
// truth, instruction templates, and prompt bundles for a vision-LLM.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "somlist/annotations.hpp"
#include "somlist/listing.hpp"
#include "somlist/markalloc.hpp"

namespace som {

/// Items are (tag_id, category name) in tag order.
ListingRecord rule_based_listing(const AnnotationSet& set, std::int64_t image_id,
                                 std::span<const TagPlacement> placements);

struct InstructionTemplate {
    int id = 0;
    std::string text;
    friend bool operator==(const InstructionTemplate&, const InstructionTemplate&) = default;
};

/// The shipped listing instructions.
const std::vector<InstructionTemplate>& listing_templates();

/// Loads templates from a JSON array of {"id", "text"}.
std::vector<InstructionTemplate> templates_from_json(std::string_view json_text);

/// Uniform choice, fixed for a given seed.
const InstructionTemplate& sample_template(std::span<const InstructionTemplate> templates, std::uint64_t seed);

enum class PromptMode { zero_shot, improved_sysmsg, two_shot_icl };

std::string_view to_string(PromptMode mode);
PromptMode prompt_mode_from_string(std::string_view name);

struct Exemplar {
    std::string image_png;
    std::string listing_text;
};

struct PromptBundle {
    PromptMode mode = PromptMode::zero_shot;
    std::string system_message;  // empty means the endpoint's default
    std::vector<Exemplar> exemplars;
    std::string user_text;
    std::string image_png;
};

/// Throws DataError if the mode/system-message/exemplar contract is broken.
void validate_bundle(const PromptBundle& bundle);

/// Shipped prompt texts; tests and callers can inspect them.
struct PromptTexts {
    std::string listing_user_text;
    std::string improved_system_message;  // includes distant_object_rule
    std::string distant_object_rule;
    std::string qa_system_message;
    std::string qa_user_text;
};
const PromptTexts& prompt_texts();

/// The two human-annotated in-context exemplars.
const std::vector<Exemplar>& icl_exemplars();

PromptBundle build_listing_prompt(const TaggedImage& tagged, PromptMode mode);
/// Same, from an already-encoded tagged PNG.
PromptBundle build_listing_prompt(std::string tagged_png, std::size_t tag_count, PromptMode mode);

/// Multi-turn QA request; always uses the improved system message.
PromptBundle build_qa_prompt(const TaggedImage& tagged);
PromptBundle build_qa_prompt(std::string tagged_png, std::size_t tag_count);

/// Content hash of a bundle; names its replay fixture.
std::string bundle_hash(const PromptBundle& bundle);

}  // namespace som
