#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace som {

struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned pixel rectangle covering [x, x+w) x [y, y+h).
struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    bool intersects(const Box& o) const {
        return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
    }
    bool inside(int width, int height) const {
        return x >= 0 && y >= 0 && right() <= width && bottom() <= height;
    }
    friend bool operator==(const Box&, const Box&) = default;
};

/// Row-major boolean grid, one byte per pixel.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return width_ == 0 || height_ == 0; }

    bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }

    const std::vector<std::uint8_t>& bits() const { return bits_; }

    /// True when every foreground pixel of this mask is also set in `other`.
    bool contained_in(const BinaryMask& other) const;
    BinaryMask& operator|=(const BinaryMask& other);

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Exact popcount.
std::int64_t mask_area(const BinaryMask& mask);

}  // namespace som
