#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace som {

struct ListingItem {
    int tag_id = 0;
    std::string description;
    friend bool operator==(const ListingItem&, const ListingItem&) = default;
};

/// Ordered (tag_id, description) pairs for one tagged image.
struct ListingRecord {
    std::int64_t image_id = 0;
    std::vector<ListingItem> items;
    friend bool operator==(const ListingRecord&, const ListingRecord&) = default;
};

/// Throws DataError unless ids run 1..N in order and every description is non-empty.
void validate_listing(const ListingRecord& record);

/// Canonical single-line form: "1. person, 2. cat, 3. dog."
std::string format_listing(const ListingRecord& record);

}  // namespace som
