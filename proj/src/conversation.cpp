#include "somlist/conversation.hpp"

#include <fstream>
#include <sstream>

#include "somlist/errors.hpp"

namespace som {

using ojson = nlohmann::ordered_json;

namespace {

const char* speaker_token(Speaker s) { return s == Speaker::human ? "human" : "gpt"; }

Speaker speaker_from(const std::string& token) {
    if (token == "human" || token == "user") {
        return Speaker::human;
    }
    if (token == "gpt" || token == "assistant") {
        return Speaker::assistant;
    }
    throw DataError("unknown speaker '" + token + "'");
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Returns the text after a recognised speaker prefix, or nullopt.
std::optional<std::string_view> strip_prefix(std::string_view line, std::initializer_list<std::string_view> prefixes) {
    std::string_view t = trim(line);
    // Tolerate markdown emphasis around the label: "**Q:**".
    while (!t.empty() && t.front() == '*') {
        t.remove_prefix(1);
    }
    for (std::string_view p : prefixes) {
        if (t.size() < p.size()) {
            continue;
        }
        bool eq = true;
        for (std::size_t i = 0; i < p.size(); ++i) {
            char a = t[i];
            if (a >= 'A' && a <= 'Z') {
                a = static_cast<char>(a - 'A' + 'a');
            }
            if (a != p[i]) {
                eq = false;
                break;
            }
        }
        if (eq) {
            std::string_view rest = t.substr(p.size());
            while (!rest.empty() && rest.front() == '*') {
                rest.remove_prefix(1);
            }
            return trim(rest);
        }
    }
    return std::nullopt;
}

}  // namespace

void validate_record(const ConversationRecord& record) {
    if (record.conversations.size() < 2) {
        throw DataError("record " + record.id + ": needs at least two turns");
    }
    for (std::size_t i = 0; i < record.conversations.size(); ++i) {
        const Speaker expected = i % 2 == 0 ? Speaker::human : Speaker::assistant;
        if (record.conversations[i].speaker != expected) {
            throw DataError("record " + record.id + ": turns must alternate starting with human");
        }
    }
    if (record.conversations.front().value.find(kImageToken) == std::string::npos) {
        throw DataError("record " + record.id + ": first human turn lacks the image token");
    }
}

ojson record_to_json(const ConversationRecord& record) {
    ojson j;
    j["id"] = record.id;
    if (record.image_id) {
        j["image_id"] = *record.image_id;
    }
    j["image"] = record.image;
    j["conversations"] = ojson::array();
    for (const auto& turn : record.conversations) {
        j["conversations"].push_back({{"from", speaker_token(turn.speaker)}, {"value", turn.value}});
    }
    return j;
}

ConversationRecord record_from_json(const ojson& j) {
    try {
        ConversationRecord r;
        const auto& id = j.at("id");
        r.id = id.is_string() ? id.get<std::string>() : id.dump();
        if (j.contains("image_id")) {
            r.image_id = j.at("image_id").get<std::int64_t>();
        }
        r.image = j.value("image", "");
        for (const auto& t : j.at("conversations")) {
            r.conversations.push_back({speaker_from(t.at("from").get<std::string>()), t.at("value").get<std::string>()});
        }
        return r;
    } catch (const ojson::exception& e) {
        throw DataError(std::string("invalid conversation record: ") + e.what());
    }
}

std::string record_to_json_line(const ConversationRecord& record) { return record_to_json(record).dump(); }

ConversationRecord to_conversation_record(const std::string& id, const ImageRef& image, std::string_view instruction,
                                          std::string_view response) {
    if (trim(response).empty()) {
        throw EmptyResponseError("empty response for image " + std::to_string(image.image_id));
    }
    ConversationRecord r;
    r.id = id;
    r.image_id = image.image_id;
    r.image = image.path;
    r.conversations.push_back({Speaker::human, std::string(kImageToken) + "\n" + std::string(instruction)});
    r.conversations.push_back({Speaker::assistant, std::string(response)});
    return r;
}

std::vector<std::pair<std::string, std::string>> parse_conversation(std::string_view text) {
    static const std::initializer_list<std::string_view> kQuestion = {"question:", "q:", "human:", "user:", "person:"};
    static const std::initializer_list<std::string_view> kAnswer = {"answer:", "a:", "assistant:", "ai:", "gpt:"};

    std::vector<std::pair<std::string, std::string>> pairs;
    enum class State { none, question, answer } state = State::none;
    std::string q, a;
    auto flush = [&] {
        if (state == State::answer && !trim(q).empty() && !trim(a).empty()) {
            pairs.emplace_back(std::string(trim(q)), std::string(trim(a)));
        }
        q.clear();
        a.clear();
    };

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        const std::string_view line = text.substr(pos, nl - pos);
        if (auto rest = strip_prefix(line, kQuestion)) {
            flush();
            state = State::question;
            q = std::string(*rest);
        } else if (auto rest_a = strip_prefix(line, kAnswer); rest_a && state != State::none) {
            if (state == State::answer) {
                a += "\n";
            }
            state = State::answer;
            a += std::string(*rest_a);
        } else if (state == State::question) {
            q += "\n";
            q += std::string(line);
        } else if (state == State::answer) {
            a += "\n";
            a += std::string(line);
        }
        if (nl == text.size()) {
            break;
        }
        pos = nl + 1;
    }
    flush();
    return pairs;
}

ConversationRecord to_qa_conversation_record(const std::string& id, const ImageRef& image, std::string_view response) {
    if (trim(response).empty()) {
        throw EmptyResponseError("empty response for image " + std::to_string(image.image_id));
    }
    const auto pairs = parse_conversation(response);
    if (pairs.empty()) {
        throw DataError("no question/answer pairs found in response for image " + std::to_string(image.image_id));
    }
    ConversationRecord r;
    r.id = id;
    r.image_id = image.image_id;
    r.image = image.path;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::string question = pairs[i].first;
        if (i == 0) {
            question = std::string(kImageToken) + "\n" + question;
        }
        r.conversations.push_back({Speaker::human, std::move(question)});
        r.conversations.push_back({Speaker::assistant, pairs[i].second});
    }
    return r;
}

std::vector<ojson> read_record_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    std::vector<ojson> records;
    if (first == std::string::npos) {
        return records;
    }
    if (text[first] == '[') {
        ojson doc;
        try {
            doc = ojson::parse(text);
        } catch (const ojson::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what(), e.byte);
        }
        for (std::size_t i = 0; i < doc.size(); ++i) {
            if (!doc[i].is_object()) {
                throw DataError(path.string() + ": record " + std::to_string(i) + " is not an object");
            }
            records.push_back(std::move(doc[i]));
        }
        return records;
    }
    std::size_t pos = 0;
    std::size_t index = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            nl = text.size();
        }
        const std::string_view line(text.data() + pos, nl - pos);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            try {
                records.push_back(ojson::parse(line));
            } catch (const ojson::parse_error& e) {
                throw ParseError(path.string() + ": record " + std::to_string(index) + ": " + e.what(), pos + e.byte);
            }
            if (!records.back().is_object()) {
                throw DataError(path.string() + ": record " + std::to_string(index) + " is not an object");
            }
            ++index;
        }
        pos = nl + 1;
    }
    return records;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ConversationRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (const auto& r : records) {
        out << record_to_json_line(r) << '\n';
    }
}

void write_json_array(const std::filesystem::path& path, const std::vector<ConversationRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    ojson arr = ojson::array();
    for (const auto& r : records) {
        arr.push_back(record_to_json(r));
    }
    out << arr.dump(2) << '\n';
}

}  // namespace som
