#include "somlist/listparse.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "somlist/errors.hpp"

namespace som {

namespace {

constexpr int kMaxDigits = 3;

bool is_blank(char c) { return c == ' ' || c == '\t'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

struct Marker {
    int id = 0;
    std::size_t begin = 0;
    std::size_t body = 0;
};

std::size_t skip_blanks(std::string_view t, std::size_t p, std::size_t end) {
    while (p < end && is_blank(t[p])) {
        ++p;
    }
    return p;
}

// Reads 1-3 digits at p. Returns the number and advances p, or nullopt.
std::optional<int> read_number(std::string_view t, std::size_t& p, std::size_t end) {
    std::size_t q = p;
    int value = 0;
    while (q < end && is_digit(t[q]) && q - p < kMaxDigits + 1) {
        value = value * 10 + (t[q] - '0');
        ++q;
    }
    const std::size_t n = q - p;
    if (n == 0 || n > kMaxDigits || value == 0) {
        return std::nullopt;
    }
    p = q;
    return value;
}

// "N." / "N)" / "N:" followed by blank or end of line.
std::optional<Marker> numeric_marker(std::string_view t, std::size_t p, std::size_t end) {
    const std::size_t begin = p;
    auto id = read_number(t, p, end);
    if (!id || p >= end) {
        return std::nullopt;
    }
    const char punct = t[p];
    if (punct != '.' && punct != ')' && punct != ':') {
        return std::nullopt;
    }
    ++p;
    if (p < end && !is_blank(t[p])) {
        return std::nullopt;
    }
    return Marker{*id, begin, skip_blanks(t, p, end)};
}

// "Tag N" with optional ":" / "-" / "." or a leading "is".
std::optional<Marker> tag_marker(std::string_view t, std::size_t p, std::size_t end) {
    const std::size_t begin = p;
    if (end - p < 5 || lower(t[p]) != 't' || lower(t[p + 1]) != 'a' || lower(t[p + 2]) != 'g') {
        return std::nullopt;
    }
    p += 3;
    if (!is_blank(t[p])) {
        return std::nullopt;
    }
    p = skip_blanks(t, p, end);
    auto id = read_number(t, p, end);
    if (!id || (p < end && is_alnum(t[p]))) {
        return std::nullopt;
    }
    p = skip_blanks(t, p, end);
    if (p < end && (t[p] == ':' || t[p] == '-' || t[p] == '.' || t[p] == ')')) {
        p = skip_blanks(t, p + 1, end);
    } else if (end - p >= 3 && lower(t[p]) == 'i' && lower(t[p + 1]) == 's' && is_blank(t[p + 2])) {
        p = skip_blanks(t, p + 2, end);
    }
    return Marker{*id, begin, p};
}

// Position just past an optional bullet ("- ", "* ", "• ") and "**".
std::size_t skip_bullet(std::string_view t, std::size_t p, std::size_t end) {
    if (p + 1 < end && (t[p] == '-' || t[p] == '*') && is_blank(t[p + 1])) {
        p = skip_blanks(t, p + 1, end);
    } else if (p + 3 < end && t.substr(p, 3) == "\xE2\x80\xA2" && is_blank(t[p + 3])) {
        p = skip_blanks(t, p + 3, end);
    }
    if (p + 1 < end && t[p] == '*' && t[p + 1] == '*') {
        p += 2;
    }
    return p;
}

// Next inline continuation ", N." / "; N)" with N == want, searching [from, end).
std::optional<std::pair<std::size_t, Marker>> find_continuation(std::string_view t, std::size_t from, std::size_t end,
                                                                int want) {
    for (std::size_t k = from; k < end; ++k) {
        if (t[k] != ',' && t[k] != ';') {
            continue;
        }
        std::size_t q = k + 1;
        if (q >= end || !is_blank(t[q])) {
            continue;
        }
        q = skip_blanks(t, q, end);
        if (auto m = numeric_marker(t, q, end); m && m->id == want) {
            return std::make_pair(k, *m);
        }
    }
    return std::nullopt;
}

// Mid-line chain opener: "... are: 1. x, 2. y". Returns the "1." marker; the
// chain must continue at least once.
std::optional<Marker> find_inline_opener(std::string_view t, std::size_t from, std::size_t end) {
    for (std::size_t k = from + 1; k < end; ++k) {
        if (t[k] != '1' || !is_blank(t[k - 1])) {
            continue;
        }
        auto m = numeric_marker(t, k, end);
        if (m && m->id == 1 && find_continuation(t, m->body, end, 2)) {
            return m;
        }
    }
    return std::nullopt;
}

std::string clean_description(std::string_view body) {
    std::size_t b = 0;
    std::size_t e = body.size();
    while (b < e && (is_blank(body[b]) || body[b] == '\r')) {
        ++b;
    }
    while (e > b) {
        const char c = body[e - 1];
        if (is_blank(c) || c == '\r' || c == '.' || c == ',' || c == ';' || c == ':') {
            --e;
        } else {
            break;
        }
    }
    return std::string(body.substr(b, e - b));
}

// Emits the item chain that starts at `first` on the line ending at `end`.
void emit_chain(std::string_view t, Marker first, std::size_t end, std::vector<EnumeratedItem>& out) {
    Marker current = first;
    while (true) {
        auto next = find_continuation(t, current.body, end, current.id + 1);
        if (!next) {
            out.push_back({current.id, current.begin, end, clean_description(t.substr(current.body, end - current.body))});
            return;
        }
        const auto [sep, marker] = *next;
        out.push_back({current.id, current.begin, marker.begin, clean_description(t.substr(current.body, sep - current.body))});
        current = marker;
    }
}

}  // namespace

std::vector<EnumeratedItem> scan_items(std::string_view t) {
    std::vector<EnumeratedItem> out;
    std::optional<int> top_indent;
    std::size_t ls = 0;
    while (ls <= t.size()) {
        std::size_t le = t.find('\n', ls);
        if (le == std::string_view::npos) {
            le = t.size();
        }
        std::size_t content_end = le;
        if (content_end > ls && t[content_end - 1] == '\r') {
            --content_end;
        }

        int indent = 0;
        std::size_t p = ls;
        while (p < content_end && is_blank(t[p])) {
            indent += t[p] == '\t' ? 4 : 1;
            ++p;
        }
        const bool nested = top_indent && indent > *top_indent;
        if (!nested && p < content_end) {
            const std::size_t q = skip_bullet(t, p, content_end);
            std::optional<Marker> m = numeric_marker(t, q, content_end);
            if (!m) {
                m = tag_marker(t, q, content_end);
            }
            if (m) {
                m->begin = p;  // the bullet belongs to the item
                top_indent = indent;
                emit_chain(t, *m, content_end, out);
            } else if (auto opener = find_inline_opener(t, p, content_end)) {
                top_indent = indent;
                emit_chain(t, *opener, content_end, out);
            }
        }
        if (le == t.size()) {
            break;
        }
        ls = le + 1;
    }
    return out;
}

ListingDetection detect_listing(std::string_view text) {
    ListingDetection det;
    const std::vector<EnumeratedItem> items = scan_items(text);
    std::vector<const EnumeratedItem*> run;
    auto close_run = [&] {
        if (run.size() >= 2) {
            det.spans.emplace_back(run.front()->begin, run.back()->end);
            det.item_count += static_cast<int>(run.size());
        }
        run.clear();
    };
    for (const auto& item : items) {
        if (!run.empty() && item.tag_id == run.back()->tag_id + 1) {
            run.push_back(&item);
            continue;
        }
        close_run();
        if (item.tag_id == 1) {
            run.push_back(&item);
        }
    }
    close_run();
    det.has_listing = det.item_count >= 2;
    return det;
}

ParsedListing parse_listing(std::string_view text) {
    ParsedListing out;
    std::unordered_set<int> seen;
    std::vector<std::pair<std::size_t, std::size_t>> covered;
    for (auto& item : scan_items(text)) {
        if (!seen.insert(item.tag_id).second) {
            continue;
        }
        covered.emplace_back(item.begin, item.end);
        out.items.push_back({item.tag_id, std::move(item.description)});
    }

    std::string rest;
    std::size_t pos = 0;
    for (const auto& [b, e] : covered) {
        if (b > pos) {
            rest.append(text.substr(pos, b - pos));
        }
        rest.push_back('\n');
        pos = std::max(pos, e);
    }
    if (pos < text.size()) {
        rest.append(text.substr(pos));
    }
    std::istringstream lines(rest);
    std::string line;
    while (std::getline(lines, line)) {
        std::string cleaned = line;
        std::size_t b = 0, e = cleaned.size();
        while (b < e && (is_blank(cleaned[b]) || cleaned[b] == '\r')) {
            ++b;
        }
        while (e > b && (is_blank(cleaned[e - 1]) || cleaned[e - 1] == '\r')) {
            --e;
        }
        if (e == b) {
            continue;
        }
        if (!out.residual.empty()) {
            out.residual.push_back('\n');
        }
        out.residual.append(cleaned, b, e - b);
    }
    return out;
}

double ProbeStats::percentage() const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(listing) / static_cast<double>(total);
}

std::string ProbeStats::percentage_text() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", percentage());
    return buf;
}

ProbeStats& ProbeStats::operator+=(const ProbeStats& other) {
    total += other.total;
    listing += other.listing;
    return *this;
}

void CorpusProbe::add(std::string_view text) {
    ++stats_.total;
    if (detect_listing(text).has_listing) {
        ++stats_.listing;
    }
}

void CorpusProbe::add_record(std::span<const std::string> texts) {
    ++stats_.total;
    if (std::any_of(texts.begin(), texts.end(), [](const std::string& t) { return detect_listing(t).has_listing; })) {
        ++stats_.listing;
    }
}

ProbeStats probe_corpus(const std::vector<std::string>& texts) {
    CorpusProbe probe;
    for (const auto& t : texts) {
        probe.add(t);
    }
    return probe.stats();
}

namespace {

using nlohmann::json;

void collect_texts(const json& record, const std::function<void(std::string_view)>& sink) {
    if (!record.is_object()) {
        return;
    }
    if (auto it = record.find("conversations"); it != record.end() && it->is_array()) {
        for (const auto& turn : *it) {
            if (!turn.is_object()) {
                continue;
            }
            auto from = turn.find("from");
            auto value = turn.find("value");
            if (from != turn.end() && value != turn.end() && from->is_string() && value->is_string()) {
                const auto& who = from->get_ref<const std::string&>();
                if (who == "gpt" || who == "assistant") {
                    sink(value->get_ref<const std::string&>());
                }
            }
        }
        return;
    }
    if (auto it = record.find("messages"); it != record.end() && it->is_array()) {
        for (const auto& msg : *it) {
            if (msg.is_object() && msg.value("role", "") == "assistant") {
                auto content = msg.find("content");
                if (content != msg.end() && content->is_string()) {
                    sink(content->get_ref<const std::string&>());
                }
            }
        }
        return;
    }
    if (auto it = record.find("text"); it != record.end() && it->is_string()) {
        sink(it->get_ref<const std::string&>());
    }
}

using RecordSink = std::function<void(const std::vector<std::string>&)>;

void emit_record_texts(const json& record, const RecordSink& sink) {
    std::vector<std::string> texts;
    collect_texts(record, [&](std::string_view t) { texts.emplace_back(t); });
    if (!texts.empty()) {
        sink(texts);
    }
}

}  // namespace

void for_each_record_texts(const std::filesystem::path& path, const RecordSink& sink) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    char first = 0;
    while (in.get(first) && (first == ' ' || first == '\n' || first == '\r' || first == '\t')) {
    }
    if (!in) {
        return;  // empty file
    }
    in.unget();

    if (first == '[') {
        // Top-level array: handle each record as soon as it is complete, then drop it.
        json::parser_callback_t cb = [&](int depth, json::parse_event_t event, json& parsed) {
            if (depth == 1 && event == json::parse_event_t::object_end) {
                emit_record_texts(parsed, sink);
                return false;
            }
            return true;
        };
        try {
            const json discarded = json::parse(in, cb);
            static_cast<void>(discarded);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what(), e.byte);
        }
        return;
    }

    std::string line;
    std::size_t line_no = 0;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t line_offset = offset;
        offset += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what(),
                             line_offset + e.byte);
        }
        emit_record_texts(record, sink);
    }
}

ProbeStats probe_file(const std::filesystem::path& path) {
    CorpusProbe probe;
    for_each_record_texts(path, [&](const std::vector<std::string>& texts) { probe.add_record(texts); });
    return probe.stats();
}

std::string probe_tsv_line(const std::string& label, const ProbeStats& stats) {
    return label + "\t" + std::to_string(stats.total) + "\t" + std::to_string(stats.listing) + "\t" +
           stats.percentage_text() + "%";
}

}  // namespace som
