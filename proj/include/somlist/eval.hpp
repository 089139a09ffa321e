#pragma once

// List-wise accuracy: for a gold listing of N items, M/N where M counts the
// tags whose predicted description matches.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "somlist/listing.hpp"
#include "somlist/listparse.hpp"

namespace som {

enum class Normalization { lowercase_trim };

struct MatchPolicy {
    Normalization normalization = Normalization::lowercase_trim;
    /// Keys and values are compared after normalization; values are canonical names.
    std::map<std::string, std::string> synonyms;
    /// Also accept predictions that contain the gold name as a whole word.
    bool substring_match = true;
};

std::string normalize(std::string_view text, Normalization mode);

bool descriptions_match(std::string_view predicted, std::string_view gold, const MatchPolicy& policy);

struct ListingScore {
    std::int64_t n_total = 0;
    std::int64_t n_correct = 0;

    double score() const { return n_total == 0 ? 0.0 : static_cast<double>(n_correct) / n_total; }
    friend bool operator==(const ListingScore&, const ListingScore&) = default;
};

ListingScore score_listing(const ParsedListing& pred, const ListingRecord& gold, const MatchPolicy& policy);

/// Exact unweighted mean of per-image M/N.
struct AggregateScore {
    std::string exact;      // reduced "p/q"
    double value = 0.0;     // exact value rounded to 4 decimals
    std::string text;       // "0.7500"
};

AggregateScore aggregate_scores(std::span<const ListingScore> scores);

struct ImageScore {
    std::int64_t image_id = 0;
    ListingScore score;
    bool missing_prediction = false;
};

struct ScoreReport {
    std::vector<ImageScore> images;  // sorted by image_id
    AggregateScore aggregate;
};

/// Gold: a directory of `.tags.json` sidecars, one sidecar, or JSON Lines of
/// {"image_id", "items": [{"tag_id", "description"}]}.
std::map<std::int64_t, ListingRecord> load_gold(const std::filesystem::path& path);

/// Predictions: JSON Lines of {"image_id", "raw_text"}, {"image_id", "items"},
/// or conversation records carrying "image_id" (first assistant turn is used).
std::map<std::int64_t, ParsedListing> load_predictions(const std::filesystem::path& path);

/// Gold images without a prediction score 0/N and are flagged as missing.
ScoreReport score_listings(const std::map<std::int64_t, ParsedListing>& pred,
                           const std::map<std::int64_t, ListingRecord>& gold, const MatchPolicy& policy);

ScoreReport score_file(const std::filesystem::path& pred, const std::filesystem::path& gold, const MatchPolicy& policy);

std::string report_to_json(const ScoreReport& report);

/// {"substring_match": bool, "synonyms": {name: canonical}}
MatchPolicy match_policy_from_json(std::string_view json_text);

}  // namespace som
