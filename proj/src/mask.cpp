#include "somlist/mask.hpp"

#include <algorithm>

#include "somlist/errors.hpp"

namespace som {

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw DimensionError("mask dimensions must be non-negative");
    }
    bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

bool BinaryMask::contained_in(const BinaryMask& other) const {
    if (other.width_ != width_ || other.height_ != height_) {
        throw DimensionError("mask containment requires equal dimensions");
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && !other.bits_[i]) {
            return false;
        }
    }
    return true;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
    if (other.width_ != width_ || other.height_ != height_) {
        throw DimensionError("mask union requires equal dimensions");
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        bits_[i] |= other.bits_[i];
    }
    return *this;
}

std::int64_t mask_area(const BinaryMask& mask) {
    return std::count(mask.bits().begin(), mask.bits().end(), std::uint8_t{1});
}

}  // namespace som
