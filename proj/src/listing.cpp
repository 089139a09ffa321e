#include "somlist/listing.hpp"

#include "somlist/errors.hpp"

namespace som {

void validate_listing(const ListingRecord& record) {
    for (std::size_t i = 0; i < record.items.size(); ++i) {
        const auto& item = record.items[i];
        if (item.tag_id != static_cast<int>(i) + 1) {
            throw DataError("listing for image " + std::to_string(record.image_id) + ": expected tag " +
                            std::to_string(i + 1) + ", found " + std::to_string(item.tag_id));
        }
        if (item.description.empty()) {
            throw DataError("listing for image " + std::to_string(record.image_id) + ": tag " +
                            std::to_string(item.tag_id) + " has an empty description");
        }
    }
}

std::string format_listing(const ListingRecord& record) {
    std::string out;
    for (const auto& item : record.items) {
        if (!out.empty()) {
            out += ", ";
        }
        out += std::to_string(item.tag_id);
        out += ". ";
        out += item.description;
    }
    if (!out.empty()) {
        out += '.';
    }
    return out;
}

}  // namespace som
