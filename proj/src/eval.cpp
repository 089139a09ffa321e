#include "somlist/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "somlist/errors.hpp"
#include "somlist/sidecar.hpp"

namespace som {

namespace {

using nlohmann::json;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           static_cast<unsigned char>(c) >= 0x80;
}

bool contains_word(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) {
        return false;
    }
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
        if (left_ok && right_ok) {
            return true;
        }
    }
    return false;
}

std::string canonical(const std::string& name, const MatchPolicy& policy) {
    if (auto it = policy.synonyms.find(name); it != policy.synonyms.end()) {
        return normalize(it->second, policy.normalization);
    }
    for (const auto& [alias, target] : policy.synonyms) {
        if (normalize(alias, policy.normalization) == name) {
            return normalize(target, policy.normalization);
        }
    }
    return name;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            lines.push_back(std::move(line));
        }
    }
    return lines;
}

json parse_line(const std::string& line, const std::filesystem::path& path, std::size_t index) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": record " + std::to_string(index) + ": " + e.what(), e.byte);
    }
}

std::vector<ListingItem> items_from_json(const json& items) {
    std::vector<ListingItem> out;
    for (const auto& it : items) {
        out.push_back({it.at("tag_id").get<int>(), it.at("description").get<std::string>()});
    }
    return out;
}

}  // namespace

std::string normalize(std::string_view text, Normalization) {
    std::size_t b = 0, e = text.size();
    auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (b < e && blank(text[b])) {
        ++b;
    }
    while (e > b && blank(text[e - 1])) {
        --e;
    }
    std::string out(text.substr(b, e - b));
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

bool descriptions_match(std::string_view predicted, std::string_view gold, const MatchPolicy& policy) {
    const std::string pred_norm = normalize(predicted, policy.normalization);
    const std::string gold_canon = canonical(normalize(gold, policy.normalization), policy);
    if (canonical(pred_norm, policy) == gold_canon) {
        return true;
    }
    if (!policy.substring_match) {
        return false;
    }
    if (contains_word(pred_norm, gold_canon)) {
        return true;
    }
    for (const auto& [alias, target] : policy.synonyms) {
        if (normalize(target, policy.normalization) == gold_canon &&
            contains_word(pred_norm, normalize(alias, policy.normalization))) {
            return true;
        }
    }
    return false;
}

ListingScore score_listing(const ParsedListing& pred, const ListingRecord& gold, const MatchPolicy& policy) {
    if (gold.items.empty()) {
        throw DataError("gold listing for image " + std::to_string(gold.image_id) + " is empty");
    }
    std::unordered_map<int, const std::string*> by_id;
    for (const auto& item : pred.items) {
        by_id.emplace(item.tag_id, &item.description);  // first occurrence wins
    }
    ListingScore score;
    score.n_total = static_cast<std::int64_t>(gold.items.size());
    for (const auto& g : gold.items) {
        auto it = by_id.find(g.tag_id);
        if (it != by_id.end() && descriptions_match(*it->second, g.description, policy)) {
            ++score.n_correct;
        }
    }
    return score;
}

AggregateScore aggregate_scores(std::span<const ListingScore> scores) {
    if (scores.empty()) {
        throw DataError("cannot aggregate an empty score list");
    }
    cpp_rational sum = 0;
    for (const auto& s : scores) {
        if (s.n_total <= 0 || s.n_correct < 0 || s.n_correct > s.n_total) {
            throw DataError("invalid listing score " + std::to_string(s.n_correct) + "/" + std::to_string(s.n_total));
        }
        sum += cpp_rational(cpp_int(s.n_correct), cpp_int(s.n_total));
    }
    const cpp_rational mean = sum / cpp_rational(static_cast<long long>(scores.size()));

    AggregateScore out;
    const cpp_int num = boost::multiprecision::numerator(mean);
    const cpp_int den = boost::multiprecision::denominator(mean);
    out.exact = num.str() + "/" + den.str();
    // Round half up to 4 decimals; the mean lies in [0, 1].
    const cpp_int scaled = (num * 20000 + den) / (2 * den);
    const long long units = scaled.convert_to<long long>();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%04lld", units / 10000, units % 10000);
    out.text = buf;
    out.value = static_cast<double>(units) / 10000.0;
    return out;
}

std::map<std::int64_t, ListingRecord> load_gold(const std::filesystem::path& path) {
    std::map<std::int64_t, ListingRecord> gold;
    auto add_sidecar = [&](const TagSidecar& sc) {
        ListingRecord rec;
        rec.image_id = sc.image_id;
        for (const auto& sp : sc.placements) {
            rec.items.push_back({sp.placement.tag_id, sp.category});
        }
        std::sort(rec.items.begin(), rec.items.end(),
                  [](const ListingItem& a, const ListingItem& b) { return a.tag_id < b.tag_id; });
        if (!gold.emplace(rec.image_id, std::move(rec)).second) {
            throw DataError("duplicate gold image " + std::to_string(sc.image_id));
        }
    };
    std::error_code ec;
    if (std::filesystem::is_directory(path, ec)) {
        for (const auto& p : list_sidecars(path)) {
            add_sidecar(read_sidecar(p));
        }
        return gold;
    }
    if (path.filename().string().ends_with(".tags.json")) {
        add_sidecar(read_sidecar(path));
        return gold;
    }
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const json j = parse_line(lines[i], path, i);
        try {
            ListingRecord rec;
            rec.image_id = j.at("image_id").get<std::int64_t>();
            rec.items = items_from_json(j.at("items"));
            if (!gold.emplace(rec.image_id, std::move(rec)).second) {
                throw DataError("duplicate gold image " + std::to_string(j.at("image_id").get<std::int64_t>()));
            }
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
        }
    }
    return gold;
}

std::map<std::int64_t, ParsedListing> load_predictions(const std::filesystem::path& path) {
    std::map<std::int64_t, ParsedListing> pred;
    const auto lines = read_lines(path);
    if (lines.empty()) {
        throw DataError("prediction file " + path.string() + " is empty");
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const json j = parse_line(lines[i], path, i);
        try {
            const std::int64_t image_id = j.at("image_id").get<std::int64_t>();
            ParsedListing listing;
            if (j.contains("raw_text")) {
                listing = parse_listing(j.at("raw_text").get<std::string>());
            } else if (j.contains("items")) {
                listing.items = items_from_json(j.at("items"));
            } else if (j.contains("conversations")) {
                for (const auto& turn : j.at("conversations")) {
                    const std::string from = turn.at("from").get<std::string>();
                    if (from == "gpt" || from == "assistant") {
                        listing = parse_listing(turn.at("value").get<std::string>());
                        break;
                    }
                }
            } else {
                throw DataError(path.string() + ": record " + std::to_string(i) +
                                " has none of raw_text, items, conversations");
            }
            if (!pred.emplace(image_id, std::move(listing)).second) {
                throw DataError(path.string() + ": duplicate prediction for image " + std::to_string(image_id));
            }
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
        }
    }
    return pred;
}

ScoreReport score_listings(const std::map<std::int64_t, ParsedListing>& pred,
                           const std::map<std::int64_t, ListingRecord>& gold, const MatchPolicy& policy) {
    for (const auto& [image_id, listing] : pred) {
        if (!gold.contains(image_id)) {
            throw KeyError("prediction for image " + std::to_string(image_id) + " has no gold listing", image_id);
        }
    }
    if (gold.empty()) {
        throw DataError("gold set is empty");
    }
    ScoreReport report;
    static const ParsedListing kEmpty;
    std::vector<ListingScore> scores;
    for (const auto& [image_id, record] : gold) {
        auto it = pred.find(image_id);
        ImageScore is;
        is.image_id = image_id;
        is.missing_prediction = it == pred.end();
        is.score = score_listing(is.missing_prediction ? kEmpty : it->second, record, policy);
        scores.push_back(is.score);
        report.images.push_back(is);
    }
    report.aggregate = aggregate_scores(scores);
    return report;
}

ScoreReport score_file(const std::filesystem::path& pred, const std::filesystem::path& gold, const MatchPolicy& policy) {
    auto predictions = load_predictions(pred);
    return score_listings(predictions, load_gold(gold), policy);
}

std::string report_to_json(const ScoreReport& report) {
    nlohmann::ordered_json j;
    j["images"] = nlohmann::ordered_json::array();
    std::int64_t missing = 0;
    for (const auto& is : report.images) {
        nlohmann::ordered_json e;
        e["image_id"] = is.image_id;
        e["n_correct"] = is.score.n_correct;
        e["n_total"] = is.score.n_total;
        e["score"] = is.score.score();
        if (is.missing_prediction) {
            e["missing_prediction"] = true;
            ++missing;
        }
        j["images"].push_back(std::move(e));
    }
    j["n_images"] = report.images.size();
    j["n_missing_predictions"] = missing;
    j["aggregate"] = report.aggregate.value;
    j["aggregate_exact"] = report.aggregate.exact;
    j["aggregate_text"] = report.aggregate.text;
    return j.dump(2) + "\n";
}

MatchPolicy match_policy_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed match policy: ") + e.what(), e.byte);
    }
    MatchPolicy policy;
    try {
        if (j.contains("normalization") && j.at("normalization").get<std::string>() != "lowercase_trim") {
            throw ConfigError("unsupported normalization " + j.at("normalization").get<std::string>());
        }
        policy.substring_match = j.value("substring_match", true);
        if (j.contains("synonyms")) {
            for (const auto& [k, v] : j.at("synonyms").items()) {
                policy.synonyms[normalize(k, policy.normalization)] = normalize(v.get<std::string>(), policy.normalization);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid match policy: ") + e.what());
    }
    return policy;
}

}  // namespace som
