#pragma once

// Instruction-tuning conversation records in the LLaVA JSON layout:
//   {"id": ..., "image_id": ..., "image": ..., "conversations": [
//       {"from": "human", "value": "<image>\n..."}, {"from": "gpt", "value": ...}]}

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace som {

inline constexpr std::string_view kImageToken = "<image>";

enum class Speaker { human, assistant };

struct Turn {
    Speaker speaker = Speaker::human;
    std::string value;
    friend bool operator==(const Turn&, const Turn&) = default;
};

struct ConversationRecord {
    std::string id;
    std::optional<std::int64_t> image_id;
    std::string image;
    std::vector<Turn> conversations;
    friend bool operator==(const ConversationRecord&, const ConversationRecord&) = default;
};

/// >= 2 turns, strict human/assistant alternation, image token in the first turn.
void validate_record(const ConversationRecord& record);

nlohmann::ordered_json record_to_json(const ConversationRecord& record);
ConversationRecord record_from_json(const nlohmann::ordered_json& j);

/// Compact single-line JSON.
std::string record_to_json_line(const ConversationRecord& record);

struct ImageRef {
    std::int64_t image_id = 0;
    std::string path;
};

/// Two turns: image token + instruction, then the response.
ConversationRecord to_conversation_record(const std::string& id, const ImageRef& image, std::string_view instruction,
                                          std::string_view response);

/// Splits a generated "Q: ... / A: ..." transcript into question/answer pairs.
std::vector<std::pair<std::string, std::string>> parse_conversation(std::string_view text);

/// One human/assistant turn pair per parsed exchange; the image token goes on the first question.
ConversationRecord to_qa_conversation_record(const std::string& id, const ImageRef& image, std::string_view response);

/// Reads a JSON array or JSON Lines file of records, keeping each record's raw JSON.
std::vector<nlohmann::ordered_json> read_record_file(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<ConversationRecord>& records);
void write_json_array(const std::filesystem::path& path, const std::vector<ConversationRecord>& records);

}  // namespace som
