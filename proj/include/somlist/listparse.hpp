#pragma once

// Enumerated-list grammar shared by the corpus probe and the prediction parser.
//
// An item starts with an enumerator at the beginning of a line (after
// optional indentation and an optional "-", "*" or bullet mark):
//     N.   N)   N:   Tag N
// where N has 1-3 digits and "N." / "N)" / "N:" must be followed by
// whitespace or the end of the line (so "2.0" or "10:30" never match).
// On the same line, ", N." / "; N)" etc. continues the item chain when N is
// the previous id plus one, which covers "1. person, 2. cat, 3. dog.".
// A chain may also open mid-line after a colon ("items: 1. a, 2. b") as long
// as it continues at least once on that line.
//
// Enumerators indented deeper than the most recent accepted item are nested
// and treated as body text.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "somlist/listing.hpp"

namespace som {

struct ParsedListing {
    std::vector<ListingItem> items;
    std::string residual;
    friend bool operator==(const ParsedListing&, const ParsedListing&) = default;
};

struct ListingDetection {
    bool has_listing = false;
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // [begin, end) byte offsets
    int item_count = 0;
};

/// One enumerated item located in the source text.
struct EnumeratedItem {
    int tag_id = 0;
    std::size_t begin = 0;       // first byte of the enumerator
    std::size_t end = 0;         // one past the item body
    std::string description;     // trimmed body
};

/// Every top-level item in `text`, in order of appearance.
std::vector<EnumeratedItem> scan_items(std::string_view text);

/// A listing is a run of >= 2 items numbered 1, 2, 3, ... (each id one more
/// than the previous). Unrelated text between items does not break a run.
ListingDetection detect_listing(std::string_view text);

/// Extracts items; repeated ids keep their first occurrence and the rest of
/// the text lands in `residual`.
ParsedListing parse_listing(std::string_view text);

struct ProbeStats {
    std::int64_t total = 0;
    std::int64_t listing = 0;

    /// Percentage of texts containing a listing; 0 for an empty corpus.
    double percentage() const;
    /// "7.16" style, two decimals.
    std::string percentage_text() const;

    ProbeStats& operator+=(const ProbeStats& other);
    friend bool operator==(const ProbeStats&, const ProbeStats&) = default;
};

/// Streaming counter; shards may be merged with +=.
class CorpusProbe {
public:
    void add(std::string_view text);
    /// One record: counted once, as a listing if any of its texts holds one.
    void add_record(std::span<const std::string> texts);
    const ProbeStats& stats() const { return stats_; }

private:
    ProbeStats stats_;
};

ProbeStats probe_corpus(const std::vector<std::string>& texts);

/// Calls `sink` once per record of an instruction-tuning file (JSON array or
/// JSON Lines; LLaVA "conversations" or chat "messages") with its
/// assistant-side texts. Records with neither shape but a string "text" field
/// contribute that field. Records without any such text are skipped.
void for_each_record_texts(const std::filesystem::path& path,
                           const std::function<void(const std::vector<std::string>&)>& sink);

ProbeStats probe_file(const std::filesystem::path& path);

/// "path\t#texts\t#listing\tpct%"
std::string probe_tsv_line(const std::string& label, const ProbeStats& stats);

}  // namespace som
